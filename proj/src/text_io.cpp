#include "kmpc/text_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "kmpc/errors.hpp"

namespace kmpc::io {

namespace {

constexpr const char* kPredictorHeader = "# kmpc-predictor v1";
constexpr const char* kCondensedHeader = "# kmpc-condensed v1";

template <typename T>
T read_value(std::istream& in, const char* what) {
    T value{};
    if (!(in >> value)) {
        throw InvalidInput(std::string("failed to read ") + what);
    }
    return value;
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row, char sep) {
    for (Eigen::Index j = 0; j < row.size(); ++j) {
        if (j > 0) {
            out << sep;
        }
        out << row(j);
    }
    out << '\n';
}

std::string next_content_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) {
            return line;
        }
    }
    throw InvalidInput("unexpected end of input");
}

}  // namespace

boxqp::BoxQP read_box_qp(std::istream& in) {
    const long long n = read_value<long long>(in, "problem size");
    if (n < 1 || n > 100000) {
        throw InvalidInput("problem size must be a positive integer");
    }
    boxqp::BoxQP qp;
    qp.H.resize(n, n);
    qp.h.resize(n);
    for (long long i = 0; i < n; ++i) {
        for (long long j = 0; j < n; ++j) {
            qp.H(i, j) = read_value<double>(in, "Hessian entry");
        }
    }
    for (long long i = 0; i < n; ++i) {
        qp.h(i) = read_value<double>(in, "gradient entry");
    }
    double extra = 0.0;
    if (in >> extra) {
        throw InvalidInput("trailing data after box QP");
    }
    qp.validate();
    return qp;
}

void write_box_qp(std::ostream& out, const boxqp::BoxQP& qp) {
    out << std::setprecision(17) << qp.size() << '\n';
    for (Eigen::Index i = 0; i < qp.H.rows(); ++i) {
        write_row(out, qp.H.row(i), ' ');
    }
    write_row(out, qp.h.transpose(), ' ');
}

void write_solution(std::ostream& out, const boxqp::Solution& sol) {
    out << std::setprecision(17);
    out << "iterations = " << sol.iterations << '\n';
    out << "duality_gap = " << sol.duality_gap << '\n';
    out << "per_iteration_flops = " << sol.per_iteration_flops << '\n';
    out << "total_flops = " << sol.total_flops << '\n';
    out << "z_star = ";
    write_row(out, sol.z_star.transpose(), ' ');
}

koopman::SnapshotDataset read_dataset_csv(std::istream& in) {
    std::string header = next_content_line(in);
    std::replace(header.begin(), header.end(), ',', ' ');
    std::istringstream hs(header);
    const long long nx = read_value<long long>(hs, "n_x");
    const long long nu = read_value<long long>(hs, "n_u");
    const long long nd = read_value<long long>(hs, "N_d");
    if (nx < 1 || nu < 1 || nd < 1) {
        throw InvalidInput("dataset header must hold positive n_x, n_u, N_d");
    }
    koopman::SnapshotDataset data{Eigen::MatrixXd(nx, nd), Eigen::MatrixXd(nu, nd),
                                  Eigen::MatrixXd(nx, nd)};
    for (long long j = 0; j < nd; ++j) {
        std::string line = next_content_line(in);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        for (long long i = 0; i < nx; ++i) {
            data.X(i, j) = read_value<double>(row, "state entry");
        }
        for (long long i = 0; i < nu; ++i) {
            data.U(i, j) = read_value<double>(row, "input entry");
        }
        for (long long i = 0; i < nx; ++i) {
            data.X_plus(i, j) = read_value<double>(row, "successor entry");
        }
        double extra = 0.0;
        if (row >> extra) {
            throw InvalidInput("dataset row " + std::to_string(j + 1) + " has too many fields");
        }
    }
    return data;
}

void write_dataset_csv(std::ostream& out, const koopman::SnapshotDataset& data) {
    data.validate();
    out << data.n_x() << ',' << data.n_u() << ',' << data.size() << '\n';
    out << std::setprecision(17);
    Eigen::RowVectorXd row(2 * data.n_x() + data.n_u());
    for (Eigen::Index j = 0; j < data.size(); ++j) {
        row << data.X.col(j).transpose(), data.U.col(j).transpose(), data.X_plus.col(j).transpose();
        write_row(out, row, ',');
    }
}

void write_matrix_block(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
    out << std::setprecision(17) << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        write_row(out, m.row(i), ' ');
    }
}

Eigen::MatrixXd read_matrix_block(std::istream& in, const std::string& name) {
    const auto tag = read_value<std::string>(in, "block name");
    if (tag != name) {
        throw InvalidInput("expected block '" + name + "', found '" + tag + "'");
    }
    const long long rows = read_value<long long>(in, "row count");
    const long long cols = read_value<long long>(in, "column count");
    if (rows < 0 || cols < 0) {
        throw InvalidInput("negative matrix dimensions in block '" + name + "'");
    }
    Eigen::MatrixXd m(rows, cols);
    for (long long i = 0; i < rows; ++i) {
        for (long long j = 0; j < cols; ++j) {
            m(i, j) = read_value<double>(in, "matrix entry");
        }
    }
    return m;
}

koopman::LiftedPredictor read_predictor(std::istream& in) {
    if (next_content_line(in) != kPredictorHeader) {
        throw InvalidInput("not a predictor file");
    }
    if (read_value<std::string>(in, "observable tag") != "observable") {
        throw InvalidInput("predictor file is missing its observable line");
    }
    const long long nx = read_value<long long>(in, "observable n_x");
    const auto descriptor = read_value<std::string>(in, "observable descriptor");
    if (read_value<std::string>(in, "dims tag") != "dims") {
        throw InvalidInput("predictor file is missing its dims line");
    }
    const long long npsi = read_value<long long>(in, "n_psi");
    const long long nu = read_value<long long>(in, "n_u");
    const long long nx2 = read_value<long long>(in, "n_x");

    koopman::LiftedPredictor p;
    p.observable = koopman::ObservableMap::parse(nx, descriptor);
    p.A = read_matrix_block(in, "A");
    p.B = read_matrix_block(in, "B");
    p.C = read_matrix_block(in, "C");
    if (p.n_psi() != npsi || p.n_u() != nu || p.n_x() != nx2) {
        throw InvalidInput("predictor dims line disagrees with its blocks");
    }
    p.validate();
    return p;
}

void write_predictor(std::ostream& out, const koopman::LiftedPredictor& p) {
    p.validate();
    out << kPredictorHeader << '\n';
    out << "observable " << p.observable.n_x() << ' ' << p.observable.descriptor() << '\n';
    out << "dims " << p.n_psi() << ' ' << p.n_u() << ' ' << p.n_x() << '\n';
    write_matrix_block(out, "A", p.A);
    write_matrix_block(out, "B", p.B);
    write_matrix_block(out, "C", p.C);
}

void write_condensed(std::ostream& out, const mpc::CondensedData& cd) {
    out << kCondensedHeader << '\n';
    out << "dims " << cd.horizon << ' ' << cd.n_u << ' ' << cd.n_x << ' ' << cd.n_psi << '\n';
    write_matrix_block(out, "H", cd.H);
    write_matrix_block(out, "S", cd.S);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw InvalidInput("cannot create " + path.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    out << contents;
    if (!out) {
        throw InvalidInput("failed writing " + path.string());
    }
}

}  // namespace kmpc::io
