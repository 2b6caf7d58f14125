#include "kmpc/koopman.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "kmpc/errors.hpp"

namespace kmpc::koopman {

namespace {

const char* block_name(ObservableBlock b) {
    switch (b) {
    case ObservableBlock::state: return "state";
    case ObservableBlock::constant: return "constant";
    case ObservableBlock::shifted_product: return "shifted_product";
    case ObservableBlock::square: return "square";
    }
    return "?";
}

Eigen::Index block_width(ObservableBlock b, Eigen::Index n_x) {
    return b == ObservableBlock::constant ? 1 : n_x;
}

}  // namespace

ObservableMap::ObservableMap(Eigen::Index n_x, std::vector<ObservableBlock> blocks)
    : n_x_(n_x), blocks_(std::move(blocks)) {
    if (n_x < 1) {
        throw InvalidInput("observable map needs n_x >= 1");
    }
    if (blocks_.empty()) {
        throw InvalidInput("observable map needs at least one block");
    }
    for (auto b : blocks_) {
        n_psi_ += block_width(b, n_x_);
    }
}

ObservableMap ObservableMap::shifted_quadratic(Eigen::Index n_x) {
    return ObservableMap(n_x, {ObservableBlock::state, ObservableBlock::constant,
                               ObservableBlock::shifted_product, ObservableBlock::square});
}

ObservableMap ObservableMap::identity(Eigen::Index n_x) {
    return ObservableMap(n_x, {ObservableBlock::state});
}

ObservableMap ObservableMap::parse(Eigen::Index n_x, const std::string& descriptor) {
    std::vector<ObservableBlock> blocks;
    std::stringstream in(descriptor);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (token == "state") {
            blocks.push_back(ObservableBlock::state);
        } else if (token == "constant") {
            blocks.push_back(ObservableBlock::constant);
        } else if (token == "shifted_product") {
            blocks.push_back(ObservableBlock::shifted_product);
        } else if (token == "square") {
            blocks.push_back(ObservableBlock::square);
        } else {
            throw InvalidInput("unknown observable block '" + token + "'");
        }
    }
    return ObservableMap(n_x, std::move(blocks));
}

std::string ObservableMap::descriptor() const {
    std::string out;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += block_name(blocks_[i]);
    }
    return out;
}

bool ObservableMap::leads_with_state() const {
    return !blocks_.empty() && blocks_.front() == ObservableBlock::state;
}

void ObservableMap::lift_into(const Eigen::Ref<const Eigen::VectorXd>& x,
                              Eigen::Ref<Eigen::VectorXd> psi) const {
    if (x.size() != n_x_ || psi.size() != n_psi_) {
        throw InvalidInput("lift: expected state of length " + std::to_string(n_x_) + ", got " +
                           std::to_string(x.size()));
    }
    Eigen::Index offset = 0;
    for (auto b : blocks_) {
        switch (b) {
        case ObservableBlock::state:
            psi.segment(offset, n_x_) = x;
            break;
        case ObservableBlock::constant:
            psi(offset) = 1.0;
            break;
        case ObservableBlock::shifted_product:
            // pairs x_i with x_{i-1}; the last component wraps to the front
            psi(offset) = x(0) * x(n_x_ - 1);
            for (Eigen::Index i = 1; i < n_x_; ++i) {
                psi(offset + i) = x(i) * x(i - 1);
            }
            break;
        case ObservableBlock::square:
            psi.segment(offset, n_x_) = x.cwiseAbs2();
            break;
        }
        offset += block_width(b, n_x_);
    }
}

Eigen::VectorXd ObservableMap::lift(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    Eigen::VectorXd psi(n_psi_);
    lift_into(x, psi);
    return psi;
}

Eigen::MatrixXd ObservableMap::lift_columns(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    Eigen::MatrixXd out(n_psi_, X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        lift_into(X.col(j), out.col(j));
    }
    return out;
}

std::uint64_t ObservableMap::lifting_flops() const {
    std::uint64_t flops = 0;
    for (auto b : blocks_) {
        if (b == ObservableBlock::shifted_product || b == ObservableBlock::square) {
            flops += static_cast<std::uint64_t>(n_x_);
        }
    }
    return flops;
}

void SnapshotDataset::validate() const {
    if (X.cols() < 1) {
        throw InvalidInput("snapshot dataset is empty");
    }
    if (U.cols() != X.cols() || X_plus.cols() != X.cols()) {
        throw InvalidInput("snapshot dataset columns disagree");
    }
    if (X_plus.rows() != X.rows()) {
        throw InvalidInput("successor states have a different dimension");
    }
}

void LiftedPredictor::validate() const {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n) {
        throw InvalidInput("predictor matrices have inconsistent dimensions");
    }
    if (observable.n_psi() != n || observable.n_x() != C.rows()) {
        throw InvalidInput("predictor does not match its observable map");
    }
}

bool LiftedPredictor::output_is_state_projection() const {
    const Eigen::Index nx = C.rows();
    if (C.cols() < nx) {
        return false;
    }
    return C.leftCols(nx).isIdentity(0.0) && C.rightCols(C.cols() - nx).isZero(0.0);
}

Eigen::MatrixXd min_norm_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& regressor,
                                       const Eigen::Ref<const Eigen::MatrixXd>& target,
                                       double rcond) {
    if (regressor.cols() != target.cols()) {
        throw InvalidInput("least squares: regressor and target sample counts differ");
    }
    const Eigen::Index p = regressor.rows();
    const Eigen::Index m = target.rows();
    if (regressor.cols() == 0) {
        return Eigen::MatrixXd::Zero(m, p);
    }
    // W^T = pinv(R^T) T^T = V S^+ U^T T^T
    Eigen::BDCSVD<Eigen::MatrixXd> svd(regressor.transpose(),
                                       Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, p);
    if (sigma.size() == 0 || !(sigma(0) > 0.0)) {
        return out;
    }
    const double cutoff = rcond * sigma(0);
    Eigen::Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > cutoff) {
        ++rank;
    }
    const Eigen::MatrixXd projected = svd.matrixU().leftCols(rank).transpose() * target.transpose();
    const Eigen::MatrixXd scaled = sigma.head(rank).cwiseInverse().asDiagonal() * projected;
    out = (svd.matrixV().leftCols(rank) * scaled).transpose();
    return out;
}

PredictorMatrices fit_predictor(const SnapshotDataset& data, const ObservableMap& obs) {
    data.validate();
    if (data.n_x() != obs.n_x()) {
        throw InvalidInput("dataset state dimension does not match the observable map");
    }
    const Eigen::Index n_psi = obs.n_psi();
    const Eigen::Index n_u = data.n_u();
    Eigen::MatrixXd regressor(n_psi + n_u, data.size());
    regressor.topRows(n_psi) = obs.lift_columns(data.X);
    regressor.bottomRows(n_u) = data.U;
    const Eigen::MatrixXd target = obs.lift_columns(data.X_plus);

    const Eigen::MatrixXd ab = min_norm_least_squares(regressor, target);
    return {ab.leftCols(n_psi), ab.rightCols(n_u)};
}

Eigen::MatrixXd fit_output(const SnapshotDataset& data, const ObservableMap& obs, OutputFit mode) {
    const Eigen::Index n_x = obs.n_x();
    const Eigen::Index n_psi = obs.n_psi();
    if (mode == OutputFit::identity_projection) {
        if (!obs.leads_with_state()) {
            throw InvalidInput("identity projection requires a dictionary that leads with the state");
        }
        Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n_x, n_psi);
        C.leftCols(n_x).setIdentity();
        return C;
    }
    data.validate();
    if (data.n_x() != n_x) {
        throw InvalidInput("dataset state dimension does not match the observable map");
    }
    return min_norm_least_squares(obs.lift_columns(data.X), data.X);
}

LiftedPredictor identify(const SnapshotDataset& data, const ObservableMap& obs, OutputFit mode) {
    auto [A, B] = fit_predictor(data, obs);
    LiftedPredictor p{std::move(A), std::move(B), fit_output(data, obs, mode), obs};
    return p;
}

Eigen::VectorXd predict(const LiftedPredictor& p,
                        const Eigen::Ref<const Eigen::VectorXd>& psi,
                        const Eigen::Ref<const Eigen::VectorXd>& u) {
    if (psi.size() != p.A.cols() || u.size() != p.B.cols()) {
        throw InvalidInput("predict: dimension mismatch");
    }
    return p.A * psi + p.B * u;
}

double rollout_error(const LiftedPredictor& p,
                     const Eigen::Ref<const Eigen::VectorXd>& x0,
                     const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                     const Eigen::Ref<const Eigen::MatrixXd>& truth) {
    if (inputs.cols() != truth.cols()) {
        throw InvalidInput("rollout_error: input and truth horizons differ");
    }
    const Eigen::Index horizon = truth.cols();
    if (horizon == 0) {
        return 0.0;
    }
    if (truth.rows() != p.C.rows()) {
        throw InvalidInput("rollout_error: truth has the wrong state dimension");
    }
    Eigen::VectorXd psi = p.observable.lift(x0);
    double sum_sq = 0.0;
    for (Eigen::Index k = 0; k < horizon; ++k) {
        psi = predict(p, psi, inputs.col(k));
        sum_sq += (p.C * psi - truth.col(k)).squaredNorm();
    }
    return std::sqrt(sum_sq / static_cast<double>(horizon));
}

}  // namespace kmpc::koopman
