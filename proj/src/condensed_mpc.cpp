#include "kmpc/condensed_mpc.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "kmpc/errors.hpp"

namespace kmpc::mpc {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

bool is_symmetric(const MatrixXd& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

double min_eigenvalue(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void check_weight(const MatrixXd& w, Index dim, const char* name, bool definite) {
    if (w.rows() != dim || w.cols() != dim) {
        throw ConfigError(std::string(name) + " must be " + std::to_string(dim) + "x" +
                          std::to_string(dim));
    }
    if (!w.allFinite() || !is_symmetric(w)) {
        throw ConfigError(std::string(name) + " must be symmetric and finite");
    }
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    const double lo = min_eigenvalue(w);
    if (definite ? !(lo > 0.0) : lo < -1e-12 * scale) {
        throw ConfigError(std::string(name) + (definite ? " must be positive definite"
                                                        : " must be positive semidefinite"));
    }
}

// h_j = sum_{i >= j} G_{ji} y_i - offset_j for a block upper-triangular G with
// n_u x width blocks. Exact cost n_u * width * N (N + 1).
void block_upper_product(const MatrixXd& gain, const VectorXd& stacked, Index horizon,
                         Index n_u, Index width, const Eigen::Ref<const VectorXd>& offset,
                         Eigen::Ref<VectorXd> out, FlopCounter* flops) {
    for (Index j = 0; j < horizon; ++j) {
        const Index cols = (horizon - j) * width;
        out.segment(j * n_u, n_u).noalias() =
            gain.block(j * n_u, j * width, n_u, cols) * stacked.segment(j * width, cols);
        out.segment(j * n_u, n_u) -= offset.segment(j * n_u, n_u);
    }
    const auto N = static_cast<std::uint64_t>(horizon);
    count_flops(flops, static_cast<std::uint64_t>(n_u) * static_cast<std::uint64_t>(width) * N *
                           (N + 1));
}

}  // namespace

void MpcWeights::validate(Index n_x, Index n_u) const {
    if (horizon < 1) {
        throw ConfigError("prediction horizon must be at least 1");
    }
    check_weight(W_x, n_x, "W_x", false);
    check_weight(W_N, n_x, "W_N", false);
    check_weight(W_u, n_u, "W_u", true);
}

InputScaling InputScaling::from_bounds(const VectorXd& u_min, const VectorXd& u_max) {
    if (u_min.size() != u_max.size()) {
        throw ConfigError("input bound vectors differ in length");
    }
    InputScaling s{(u_max + u_min) / 2.0, (u_max - u_min) / 2.0};
    s.validate();
    return s;
}

InputScaling InputScaling::unit(Index n_u) {
    return {VectorXd::Zero(n_u), VectorXd::Ones(n_u)};
}

bool InputScaling::is_unit() const {
    return center.isZero(0.0) && half_range.isOnes(0.0);
}

void InputScaling::validate() const {
    if (center.size() != half_range.size() || center.size() == 0) {
        throw ConfigError("input scaling needs matching nonempty center and half-range");
    }
    if (!center.allFinite() || !half_range.allFinite() || !(half_range.minCoeff() > 0.0)) {
        throw ConfigError("input box must have positive finite width in every channel");
    }
}

VectorXd InputScaling::to_physical(const Eigen::Ref<const VectorXd>& z) const {
    const Index nu = n_u();
    if (nu == 0 || z.size() % nu != 0) {
        throw InvalidInput("input sequence length is not a multiple of n_u");
    }
    if (z.size() > 0 && z.cwiseAbs().maxCoeff() > 1.0 + 1e-9) {
        throw InvalidInput("unit-box input outside [-1, 1]");
    }
    VectorXd u(z.size());
    for (Index k = 0; k < z.size() / nu; ++k) {
        u.segment(k * nu, nu) = center + half_range.cwiseProduct(z.segment(k * nu, nu));
    }
    return u;
}

VectorXd InputScaling::to_unit(const Eigen::Ref<const VectorXd>& u) const {
    const Index nu = n_u();
    if (nu == 0 || u.size() % nu != 0) {
        throw InvalidInput("input sequence length is not a multiple of n_u");
    }
    VectorXd z(u.size());
    for (Index k = 0; k < u.size() / nu; ++k) {
        z.segment(k * nu, nu) = (u.segment(k * nu, nu) - center).cwiseQuotient(half_range);
    }
    return z;
}

MatrixXd CondensedData::dense_Qbar() const {
    MatrixXd q = MatrixXd::Zero(horizon * n_psi, horizon * n_psi);
    for (Index i = 0; i < horizon; ++i) {
        q.block(i * n_psi, i * n_psi, n_psi, n_psi) =
            i + 1 == horizon ? terminal_weight : stage_weight;
    }
    return q;
}

MatrixXd CondensedData::dense_Rbar() const {
    MatrixXd r = MatrixXd::Zero(size(), size());
    for (Index i = 0; i < horizon; ++i) {
        r.block(i * n_u, i * n_u, n_u, n_u) = input_weight;
    }
    return r;
}

CondensedData build_condensed(const koopman::LiftedPredictor& p, const MpcWeights& w) {
    return build_condensed(p, w, InputScaling::unit(p.n_u()));
}

CondensedData build_condensed(const koopman::LiftedPredictor& p,
                              const MpcWeights& w,
                              const InputScaling& scaling) {
    p.validate();
    w.validate(p.n_x(), p.n_u());
    scaling.validate();
    if (scaling.n_u() != p.n_u()) {
        throw ConfigError("input scaling has the wrong number of channels");
    }

    CondensedData cd;
    cd.horizon = w.horizon;
    cd.n_u = p.n_u();
    cd.n_x = p.n_x();
    cd.n_psi = p.n_psi();
    cd.A = p.A;
    cd.C = p.C;
    cd.W_x = w.W_x;
    cd.W_N = w.W_N;
    cd.W_u = w.W_u;
    cd.scaling = scaling;
    cd.state_projection = p.output_is_state_projection();

    const Index N = cd.horizon;
    const Index nu = cd.n_u;
    const Index nx = cd.n_x;
    const Index npsi = cd.n_psi;
    const Index n = N * nu;
    const auto D = scaling.half_range.asDiagonal();

    // powers[k] = A^k B D
    std::vector<MatrixXd> powers(static_cast<std::size_t>(N));
    powers[0] = p.B * D;
    for (Index k = 1; k < N; ++k) {
        powers[static_cast<std::size_t>(k)] = p.A * powers[static_cast<std::size_t>(k - 1)];
    }

    cd.S = MatrixXd::Zero(N * npsi, n);
    for (Index i = 0; i < N; ++i) {
        for (Index j = 0; j <= i; ++j) {
            cd.S.block(i * npsi, j * nu, npsi, nu) = powers[static_cast<std::size_t>(i - j)];
        }
    }

    cd.stage_weight = p.C.transpose() * w.W_x * p.C;
    cd.terminal_weight = p.C.transpose() * w.W_N * p.C;
    cd.input_weight = D * w.W_u * D;

    cd.H = MatrixXd::Zero(n, n);
    cd.lifted_gain = MatrixXd::Zero(n, N * npsi);
    cd.output_gain = MatrixXd::Zero(n, N * nx);
    for (Index i = 0; i < N; ++i) {
        const MatrixXd& Wi = i + 1 == N ? w.W_N : w.W_x;
        const MatrixXd CS = p.C * cd.S.middleRows(i * npsi, npsi);  // nx x n
        const MatrixXd CSW = CS.transpose() * Wi;                     // n x nx
        cd.H.noalias() += CSW * CS;
        cd.output_gain.middleCols(i * nx, nx) = CSW;
        cd.lifted_gain.middleCols(i * npsi, npsi).noalias() = CSW * p.C;
    }
    for (Index i = 0; i < N; ++i) {
        cd.H.block(i * nu, i * nu, nu, nu) += cd.input_weight;
    }
    cd.H = 0.5 * (cd.H + cd.H.transpose()).eval();

    Eigen::LLT<MatrixXd> llt(cd.H);
    if (llt.info() != Eigen::Success) {
        throw ConfigError("condensed Hessian is not positive definite");
    }

    cd.drift_image = VectorXd::Zero(n);
    if (!scaling.center.isZero(0.0)) {
        const VectorXd Bc = p.B * scaling.center;
        VectorXd drift = Bc;
        for (Index i = 0; i < N; ++i) {
            if (i > 0) {
                drift = p.A * drift + Bc;
            }
            cd.drift_image += cd.lifted_gain.middleCols(i * npsi, npsi) * drift;
        }
    }

    cd.zero_gradient_threshold = boxqp::default_zero_gradient_threshold(cd.H);
    return cd;
}

VectorXd reference_offset(const CondensedData& cd,
                          const Eigen::Ref<const VectorXd>& x_r,
                          const Eigen::Ref<const VectorXd>& u_r,
                          FlopCounter* flops) {
    if (x_r.size() != cd.n_x || u_r.size() != cd.n_u) {
        throw InvalidInput("reference dimensions do not match the condensed problem");
    }
    const Index N = cd.horizon;
    const Index nu = cd.n_u;
    const Index nx = cd.n_x;

    // S' stack(C' W_i x_r): the reference is constant over the horizon, so each
    // block row contracts against the same x_r.
    VectorXd offset(cd.size());
    for (Index j = 0; j < N; ++j) {
        VectorXd acc = VectorXd::Zero(nu);
        for (Index i = j; i < N; ++i) {
            acc.noalias() += cd.output_gain.block(j * nu, i * nx, nu, nx) * x_r;
        }
        offset.segment(j * nu, nu) = acc;
    }
    const VectorXd input_term =
        cd.scaling.half_range.cwiseProduct(cd.W_u * (u_r - cd.scaling.center));
    for (Index j = 0; j < N; ++j) {
        offset.segment(j * nu, nu) += input_term;
    }
    offset -= cd.drift_image;

    const auto uN = static_cast<std::uint64_t>(N);
    const auto unu = static_cast<std::uint64_t>(nu);
    const auto unx = static_cast<std::uint64_t>(nx);
    count_flops(flops, unu * unx * uN * (uN + 1) + 2 * unu * unu + unu + 2 * uN * unu);
    return offset;
}

VectorXd online_gradient(const CondensedData& cd,
                         const Eigen::Ref<const VectorXd>& psi0,
                         const Eigen::Ref<const VectorXd>& offset,
                         FlopCounter* flops) {
    if (psi0.size() != cd.n_psi || offset.size() != cd.size()) {
        throw InvalidInput("online_gradient: dimension mismatch");
    }
    const Index N = cd.horizon;
    const Index nx = cd.n_x;
    const Index npsi = cd.n_psi;
    const auto unpsi = static_cast<std::uint64_t>(npsi);
    const auto unx = static_cast<std::uint64_t>(nx);
    VectorXd h(cd.size());

    if (cd.state_projection) {
        // Only C psi_i = psi_i(0:nx) enters the gradient; the last stage needs
        // nothing beyond the state block.
        VectorXd states(N * nx);
        VectorXd current = psi0;
        VectorXd next(npsi);
        for (Index i = 0; i < N; ++i) {
            if (i + 1 < N) {
                next.noalias() = cd.A * current;
                current.swap(next);
                states.segment(i * nx, nx) = current.head(nx);
                count_flops(flops, unpsi * (2 * unpsi - 1));
            } else {
                states.segment(i * nx, nx).noalias() = cd.A.topRows(nx) * current;
                count_flops(flops, unx * (2 * unpsi - 1));
            }
        }
        block_upper_product(cd.output_gain, states, N, cd.n_u, nx, offset, h, flops);
    } else {
        VectorXd lifted(N * npsi);
        VectorXd current = psi0;
        for (Index i = 0; i < N; ++i) {
            lifted.segment(i * npsi, npsi).noalias() = cd.A * current;
            current = lifted.segment(i * npsi, npsi);
            count_flops(flops, unpsi * (2 * unpsi - 1));
        }
        block_upper_product(cd.lifted_gain, lifted, N, cd.n_u, npsi, offset, h, flops);
    }
    return h;
}

VectorXd online_gradient(const CondensedData& cd,
                         const Eigen::Ref<const VectorXd>& psi0,
                         const Eigen::Ref<const VectorXd>& x_r,
                         const Eigen::Ref<const VectorXd>& u_r,
                         FlopCounter* flops) {
    const VectorXd offset = reference_offset(cd, x_r, u_r, flops);
    return online_gradient(cd, psi0, offset, flops);
}

namespace {

MpcStepResult finish_step(const CondensedData& cd, VectorXd gradient,
                          const boxqp::SolverConfig& cfg, FlopCounter* flops) {
    boxqp::SolverConfig solver_cfg = cfg;
    if (!solver_cfg.zero_gradient_threshold) {
        solver_cfg.zero_gradient_threshold = cd.zero_gradient_threshold;
    }
    MpcStepResult out;
    out.solution = boxqp::solve(boxqp::BoxQP{cd.H, gradient}, solver_cfg, {}, flops);
    out.gradient = std::move(gradient);
    out.inputs = cd.scaling.to_physical(out.solution.z_star);
    if (!cd.scaling.is_unit()) {
        count_flops(flops, 2 * static_cast<std::uint64_t>(cd.n_u));
    }
    out.u0 = out.inputs.head(cd.n_u);
    return out;
}

}  // namespace

MpcStepResult solve_mpc_step(const koopman::LiftedPredictor& p,
                             const CondensedData& cd,
                             const Eigen::Ref<const VectorXd>& x_t,
                             const References& refs,
                             const boxqp::SolverConfig& cfg,
                             FlopCounter* flops) {
    const VectorXd psi0 = p.observable.lift(x_t);
    count_flops(flops, p.observable.lifting_flops());
    VectorXd h = online_gradient(cd, psi0, refs.x_r, refs.u_r, flops);
    return finish_step(cd, std::move(h), cfg, flops);
}

KoopmanMpc::KoopmanMpc(koopman::LiftedPredictor predictor, CondensedData condensed,
                       boxqp::SolverConfig cfg)
    : predictor_(std::move(predictor)), condensed_(std::move(condensed)), cfg_(cfg) {
    predictor_.validate();
    cfg_.validate();
    if (predictor_.n_psi() != condensed_.n_psi || predictor_.n_u() != condensed_.n_u) {
        throw ConfigError("predictor and condensed data disagree on dimensions");
    }
}

MpcStepResult KoopmanMpc::step(const Eigen::Ref<const VectorXd>& x_t,
                               const References& refs,
                               FlopCounter* flops) {
    const VectorXd psi0 = predictor_.observable.lift(x_t);
    count_flops(flops, predictor_.observable.lifting_flops());
    if (!cached_refs_ || !(*cached_refs_ == refs)) {
        cached_offset_ = reference_offset(condensed_, refs.x_r, refs.u_r, flops);
        cached_refs_ = refs;
    }
    VectorXd h = online_gradient(condensed_, psi0, cached_offset_, flops);
    return finish_step(condensed_, std::move(h), cfg_, flops);
}

Certificate certificate(const CertificateDims& dims, double epsilon, double flop_rate) {
    if (dims.n_u < 1 || dims.n_x < 1 || dims.n_psi < 1 || dims.horizon < 1 || dims.m_lifting < 0) {
        throw InvalidInput("certificate dimensions must be positive");
    }
    if (!(flop_rate > 0.0)) {
        throw InvalidInput("FLOP rate must be positive");
    }
    Certificate c;
    c.dims = dims;
    c.n = dims.horizon * dims.n_u;
    c.epsilon = epsilon;
    c.iterations = boxqp::iteration_count(c.n, epsilon);

    const auto N = static_cast<std::uint64_t>(dims.horizon);
    const auto nu = static_cast<std::uint64_t>(dims.n_u);
    const auto nx = static_cast<std::uint64_t>(dims.n_x);
    const auto npsi = static_cast<std::uint64_t>(dims.n_psi);
    const auto n = static_cast<std::uint64_t>(c.n);

    c.lifting_flops = static_cast<std::uint64_t>(dims.m_lifting);
    c.gradient_flops = 2 * N * npsi * npsi + N * (N + 1) * nu * npsi / 2 + N * nx * npsi +
                       N * nu * nu + 2 * n;
    c.norm_flops = n;
    c.initialization_flops = 5 * n + 3;
    // n^3/3 + n^2/2 + n/6 = n(n+1)(2n+1)/6 exactly
    c.per_iteration_flops = 1 + n * (n + 1) * (2 * n + 1) / 6 + 2 * n * n + 10 * n + 5 * n;
    c.total_flops = c.lifting_flops + c.gradient_flops + c.norm_flops + c.initialization_flops +
                    static_cast<std::uint64_t>(c.iterations) * c.per_iteration_flops;
    c.flop_rate = flop_rate;
    c.execution_time = static_cast<double>(c.total_flops) / flop_rate;
    return c;
}

std::string Certificate::report() const {
    std::ostringstream out;
    out << "# kmpc-certificate v1\n";
    out << "n_u = " << dims.n_u << '\n';
    out << "n_x = " << dims.n_x << '\n';
    out << "n_psi = " << dims.n_psi << '\n';
    out << "horizon = " << dims.horizon << '\n';
    out << "n = " << n << '\n';
    out << "epsilon = " << std::setprecision(17) << epsilon << '\n';
    out << "iterations = " << iterations << '\n';
    out << "flops.lifting = " << lifting_flops << '\n';
    out << "flops.gradient = " << gradient_flops << '\n';
    out << "flops.norm = " << norm_flops << '\n';
    out << "flops.initialization = " << initialization_flops << '\n';
    out << "flops.per_iteration = " << per_iteration_flops << '\n';
    out << "flops.iterations_total = "
        << static_cast<std::uint64_t>(iterations) * per_iteration_flops << '\n';
    out << "flops.total = " << total_flops << '\n';
    out << "flop_rate = " << flop_rate << '\n';
    out << "execution_time_s = " << execution_time << '\n';
    return out.str();
}

}  // namespace kmpc::mpc
