#include "kmpc/boxqp.hpp"

#include <cmath>
#include <algorithm>
#include <string>

#include "kmpc/dense_cholesky.hpp"
#include "kmpc/errors.hpp"

namespace kmpc::boxqp {

namespace {

constexpr double kSymmetryTolerance = 1e-12;
constexpr double kProximityBound = 0.70710678118654752440;  // 1/sqrt(2)

// Scalar work in the initialization: lambda, eta, tau, 1-eta and the
// objective scale factor.
constexpr std::uint64_t kInitScalarFlops = 12;

void check_iterate(const SolverIterate& it) {
    const Eigen::Index n = it.size();
    const int k = it.iteration;
    const double min_component = std::min({it.gamma.minCoeff(), it.theta.minCoeff(),
                                            it.alpha.minCoeff(), it.omega.minCoeff()});
    if (!(min_component > 0.0)) {
        throw NumericalBreakdown("iterate left the strictly feasible set", k);
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    if ((it.alpha + it.z - ones).lpNorm<Eigen::Infinity>() > 1e-12 ||
        (it.omega - it.z - ones).lpNorm<Eigen::Infinity>() > 1e-12) {
        throw NumericalBreakdown("slack consistency alpha = e - z, omega = e + z lost", k);
    }
    if (it.stationarity_residual() > 1e-8) {
        throw NumericalBreakdown("scaled stationarity residual above 1e-8", k);
    }
    if (k > 0) {
        const double bound = 2.0 * static_cast<double>(n) * it.tau * it.tau;
        if (it.duality_gap() > bound * (1.0 + 1e-9)) {
            throw NumericalBreakdown("duality gap exceeds 2 n tau^2", k);
        }
    }
    const double next_tau = (1.0 - it.eta) * it.tau;
    if (proximity(it, next_tau) > kProximityBound + 1e-9) {
        throw NumericalBreakdown("proximity measure exceeds 1/sqrt(2)", k);
    }
}

}  // namespace

void BoxQP::validate() const {
    const Eigen::Index n = h.size();
    if (n < 1) {
        throw InvalidInput("box QP must have at least one variable");
    }
    if (H.rows() != n || H.cols() != n) {
        throw InvalidInput("Hessian is " + std::to_string(H.rows()) + "x" +
                           std::to_string(H.cols()) + " but gradient has length " +
                           std::to_string(n));
    }
    if (!H.allFinite() || !h.allFinite()) {
        throw InvalidInput("box QP data contains non-finite values");
    }
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    if ((H - H.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
        throw InvalidInput("Hessian is not symmetric");
    }
}

void SolverConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw InvalidInput("epsilon must be positive");
    }
    if (zero_gradient_threshold && !(*zero_gradient_threshold >= 0.0)) {
        throw InvalidInput("zero_gradient_threshold must be nonnegative");
    }
}

double default_zero_gradient_threshold(const Eigen::MatrixXd& H) {
    const double norm_inf = H.size() == 0 ? 0.0 : H.cwiseAbs().rowwise().sum().maxCoeff();
    return 1e-14 * std::max(1.0, norm_inf);
}

double SolverIterate::duality_gap() const {
    return gamma.dot(alpha) + theta.dot(omega);
}

double SolverIterate::stationarity_residual() const {
    const Eigen::VectorXd grad = scaled_hessian.selfadjointView<Eigen::Lower>() * z +
                                 2.0 * lambda * h_tilde + gamma - theta;
    return grad.lpNorm<Eigen::Infinity>();
}

int iteration_count(Eigen::Index n, double epsilon) {
    if (n < 1) {
        throw InvalidInput("iteration_count: n must be positive");
    }
    const double two_n = 2.0 * static_cast<double>(n);
    if (!(epsilon > 0.0) || !(epsilon < two_n)) {
        throw InvalidInput("iteration_count: epsilon must lie in (0, 2n)");
    }
    const double root = std::sqrt(two_n);
    const double numerator = std::log(two_n / epsilon);
    const double denominator = -2.0 * std::log(root / (root + std::sqrt(2.0) - 1.0));
    const double ratio = numerator / denominator;
    return static_cast<int>(std::ceil(ratio - 1e-12)) + 1;
}

double path_shrink_rate(Eigen::Index n) {
    const double root2 = std::sqrt(2.0);
    return (root2 - 1.0) / (std::sqrt(2.0 * static_cast<double>(n)) + root2 - 1.0);
}

std::uint64_t iteration_flops(std::uint64_t n) {
    return 1 + linalg::cholesky_flops(n) + linalg::substitution_flops(n) + 23 * n;
}

std::optional<SolverIterate> scale_and_initialize(const BoxQP& qp,
                                                  double zero_gradient_threshold,
                                                  FlopCounter* flops) {
    const Eigen::Index n = qp.size();
    const auto un = static_cast<std::uint64_t>(n);
    const double h_norm = qp.h.lpNorm<Eigen::Infinity>();
    count_flops(flops, un);
    if (!(h_norm > zero_gradient_threshold)) {
        return std::nullopt;
    }

    SolverIterate it;
    it.lambda = 1.0 / std::sqrt(static_cast<double>(n) + 1.0);
    it.eta = path_shrink_rate(n);
    it.tau = 1.0 / (1.0 - it.eta);

    const double inv_norm = 1.0 / h_norm;
    it.h_tilde = qp.h * inv_norm;

    const double hessian_scale = 2.0 * it.lambda * inv_norm;
    it.scaled_hessian = Eigen::MatrixXd::Zero(n, n);
    it.scaled_hessian.triangularView<Eigen::Lower>() = qp.H;
    it.scaled_hessian.triangularView<Eigen::Lower>() *= hessian_scale;

    const Eigen::VectorXd shifted = it.lambda * it.h_tilde;
    it.z = Eigen::VectorXd::Zero(n);
    it.gamma = 1.0 - shifted.array();
    it.theta = 1.0 + shifted.array();
    it.alpha = Eigen::VectorXd::Ones(n);
    it.omega = Eigen::VectorXd::Ones(n);
    it.iteration = 0;

    count_flops(flops, kInitScalarFlops + un + un * (un + 1) / 2 + 3 * un);
    return it;
}

double proximity(const Eigen::Ref<const Eigen::VectorXd>& v,
                 const Eigen::Ref<const Eigen::VectorXd>& s,
                 double tau) {
    if (v.size() != s.size()) {
        throw InvalidInput("proximity: v and s differ in length");
    }
    if (!(tau > 0.0) || (v.size() > 0 && (!(v.minCoeff() > 0.0) || !(s.minCoeff() > 0.0)))) {
        throw InvalidInput("proximity: v, s and tau must be strictly positive");
    }
    const Eigen::ArrayXd beta = (v.array() * s.array()).sqrt();
    return (tau - beta).matrix().norm() / tau;
}

double proximity(const SolverIterate& it, double tau) {
    const Eigen::Index n = it.size();
    Eigen::VectorXd v(2 * n);
    Eigen::VectorXd s(2 * n);
    v << it.gamma, it.theta;
    s << it.alpha, it.omega;
    return proximity(v, s, tau);
}

NewtonWorkspace::NewtonWorkspace(Eigen::Index n)
    : system(n, n),
      upper_ratio(n),
      lower_ratio(n),
      upper_target(n),
      lower_target(n),
      direction(n) {}

void newton_step(SolverIterate& it, NewtonWorkspace& ws, FlopCounter* flops) {
    const Eigen::Index n = it.size();
    const auto un = static_cast<std::uint64_t>(n);
    if (ws.system.rows() != n) {
        ws = NewtonWorkspace(n);
    }
    const double tau = it.tau;

    ws.upper_ratio = it.gamma.cwiseQuotient(it.alpha);
    ws.lower_ratio = it.theta.cwiseQuotient(it.omega);

    // (2 lambda H~ + diag(gamma/alpha) + diag(theta/omega)), lower triangle only
    ws.system.triangularView<Eigen::Lower>() = it.scaled_hessian.triangularView<Eigen::Lower>();
    ws.system.diagonal() += ws.upper_ratio + ws.lower_ratio;

    ws.upper_target = tau * ws.upper_ratio.cwiseSqrt();
    ws.lower_target = tau * ws.lower_ratio.cwiseSqrt();

    // Half of the right-hand side; the factor 2 is applied to the solution.
    ws.direction = ws.lower_target - ws.upper_target + it.gamma - it.theta;
    count_flops(flops, 2 * un + 2 * un + 4 * un + 3 * un);

    if (!linalg::cholesky_factor(ws.system, flops)) {
        throw NumericalBreakdown("Newton system is not positive definite", it.iteration + 1);
    }
    linalg::cholesky_solve(ws.system, ws.direction, flops);
    ws.direction *= 2.0;

    it.z += ws.direction;
    it.alpha -= ws.direction;
    it.omega += ws.direction;
    it.gamma = ws.upper_ratio.cwiseProduct(ws.direction) + 2.0 * ws.upper_target - it.gamma;
    it.theta = 2.0 * ws.lower_target - ws.lower_ratio.cwiseProduct(ws.direction) - it.theta;
    count_flops(flops, un + 3 * un + 4 * un + 4 * un);

    ++it.iteration;
}

SolverIterate newton_step(SolverIterate it) {
    NewtonWorkspace ws(it.size());
    newton_step(it, ws);
    return it;
}

Solution solve(const BoxQP& qp,
               const SolverConfig& cfg,
               const IterationObserver& observer,
               FlopCounter* flops) {
    qp.validate();
    cfg.validate();
    const Eigen::Index n = qp.size();
    const int schedule = iteration_count(n, cfg.epsilon);
    const double threshold =
        cfg.zero_gradient_threshold.value_or(default_zero_gradient_threshold(qp.H));

    FlopCounter tally;
    auto initial = scale_and_initialize(qp, threshold, &tally);
    Solution out;
    if (!initial) {
        out.z_star = Eigen::VectorXd::Zero(n);
        out.total_flops = tally.count;
        count_flops(flops, tally.count);
        return out;
    }

    SolverIterate& it = *initial;
    if (cfg.check_invariants) {
        check_iterate(it);
    }
    if (observer) {
        observer(it);
    }

    NewtonWorkspace ws(n);
    const double shrink = 1.0 - it.eta;
    for (int k = 0; k < schedule; ++k) {
        const std::uint64_t before = tally.count;
        it.tau *= shrink;
        tally.add(1);
        newton_step(it, ws, &tally);
        if (k == 0) {
            out.per_iteration_flops = tally.count - before;
        }
        if (cfg.check_invariants) {
            check_iterate(it);
        }
        if (observer) {
            observer(it);
        }
        if (cfg.early_exit && it.duality_gap() <= cfg.epsilon) {
            break;
        }
    }

    out.z_star = it.z;
    out.duality_gap = it.duality_gap();
    out.iterations = it.iteration;
    out.total_flops = tally.count;
    count_flops(flops, tally.count);
    return out;
}

}  // namespace kmpc::boxqp
