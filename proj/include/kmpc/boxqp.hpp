#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include <Eigen/Core>

#include "kmpc/flops.hpp"

/**
 * @file
 * @brief Box-constrained QP solver with a data-independent iteration count.
 *
 * Solves
 *
 *     min  1/2 z' H z + z' h    s.t.  -e <= z <= e
 *
 * with a feasible path-following interior-point method that always takes the
 * full Newton step. After scaling the objective by 2*lambda/||h||_inf the
 * cost-free starting point
 *
 *     z = 0,  gamma = 1 - lambda*h~,  theta = 1 + lambda*h~,  alpha = omega = e
 *
 * is strictly feasible and close enough to the central path that a fixed
 * shrink factor (1 - eta) of the path parameter keeps every iterate in the
 * neighbourhood. The number of iterations therefore depends only on the
 * problem size n and the duality-gap tolerance.
 */

namespace kmpc::boxqp {

/// min 1/2 z'Hz + z'h over the unit box.
struct BoxQP {
    Eigen::MatrixXd H;
    Eigen::VectorXd h;

    Eigen::Index size() const { return h.size(); }

    /// Throws InvalidInput on shape mismatch, non-finite data, or an H that is
    /// not symmetric within 1e-12 relative.
    void validate() const;
};

struct SolverConfig {
    /// duality-gap tolerance on v's at termination
    double epsilon = 1e-6;
    /// evaluate per-iteration invariants and throw on violation (not counted
    /// in the FLOP tally)
    bool check_invariants = false;
    /// ||h||_inf at or below this is treated as zero; unset means
    /// default_zero_gradient_threshold(H)
    std::optional<double> zero_gradient_threshold;
    /// stop as soon as v's <= epsilon. Breaks the iteration certificate, so it
    /// is off by default.
    bool early_exit = false;

    void validate() const;
};

/// 1e-14 * max(1, ||H||_inf)
double default_zero_gradient_threshold(const Eigen::MatrixXd& H);

/// Primal-dual point of the scaled problem together with the path parameters.
/// v = (gamma, theta) are the multipliers and s = (alpha, omega) the slacks of
/// the upper and lower bounds.
struct SolverIterate {
    Eigen::VectorXd z;
    Eigen::VectorXd gamma;
    Eigen::VectorXd theta;
    Eigen::VectorXd alpha;
    Eigen::VectorXd omega;

    double tau = 0.0;
    double lambda = 0.0;
    double eta = 0.0;

    /// 2*lambda*H/||h||_inf; only the lower triangle is maintained.
    Eigen::MatrixXd scaled_hessian;
    /// h/||h||_inf
    Eigen::VectorXd h_tilde;

    /// Newton steps taken so far.
    int iteration = 0;

    Eigen::Index size() const { return z.size(); }

    /// v's = gamma'alpha + theta'omega
    double duality_gap() const;

    /// ||2 lambda H~ z + 2 lambda h~ + gamma - theta||_inf
    double stationarity_residual() const;
};

struct Solution {
    Eigen::VectorXd z_star;
    double duality_gap = 0.0;
    int iterations = 0;
    /// operations spent in one Newton iteration (identical for every iteration)
    std::uint64_t per_iteration_flops = 0;
    /// operations spent in the whole solve, zero-gradient test included
    std::uint64_t total_flops = 0;
};

/// Called once after initialization (iteration == 0) and once after every
/// Newton step.
using IterationObserver = std::function<void(const SolverIterate&)>;

/// ceil(log(2n/eps) / (-2 log(sqrt(2n)/(sqrt(2n)+sqrt(2)-1)))) + 1.
/// Throws InvalidInput unless n >= 1 and 0 < epsilon < 2n.
int iteration_count(Eigen::Index n, double epsilon);

/// Path-parameter shrink rate (sqrt(2)-1)/(sqrt(2n)+sqrt(2)-1).
double path_shrink_rate(Eigen::Index n);

/// Scales the objective and builds the starting point with
/// tau = 1/(1-eta). Returns nullopt when ||h||_inf <= zero_gradient_threshold,
/// in which case z* = 0 is optimal.
std::optional<SolverIterate> scale_and_initialize(const BoxQP& qp,
                                                  double zero_gradient_threshold,
                                                  FlopCounter* flops = nullptr);

/// xi(beta, tau) = ||tau e - sqrt(v s)|| / tau. Throws InvalidInput unless
/// v > 0, s > 0 and tau > 0.
double proximity(const Eigen::Ref<const Eigen::VectorXd>& v,
                 const Eigen::Ref<const Eigen::VectorXd>& s,
                 double tau);

/// Proximity of an iterate measured against `tau`.
double proximity(const SolverIterate& it, double tau);

/// Scratch storage for newton_step, reused across iterations.
struct NewtonWorkspace {
    Eigen::MatrixXd system;
    Eigen::VectorXd upper_ratio;  // gamma / alpha
    Eigen::VectorXd lower_ratio;  // theta / omega
    Eigen::VectorXd upper_target; // tau sqrt(gamma / alpha)
    Eigen::VectorXd lower_target; // tau sqrt(theta / omega)
    Eigen::VectorXd direction;

    explicit NewtonWorkspace(Eigen::Index n = 0);
};

/// Takes one full Newton step at the iterate's current tau (the caller has
/// already shrunk tau). Solves the reduced n x n system by Cholesky with one
/// forward and one backward substitution. Throws NumericalBreakdown if the
/// factorization fails.
void newton_step(SolverIterate& it, NewtonWorkspace& ws, FlopCounter* flops = nullptr);

/// Value-semantics convenience wrapper.
SolverIterate newton_step(SolverIterate it);

/// Runs the certified schedule: exactly iteration_count(n, epsilon) steps of
/// (tau <- (1-eta) tau, newton_step) unless early_exit is set.
Solution solve(const BoxQP& qp,
               const SolverConfig& cfg = {},
               const IterationObserver& observer = {},
               FlopCounter* flops = nullptr);

/// Operation count of one iteration as implemented:
/// 1 + n^3/3 + n^2/2 + n/6 + 2n^2 + 23n.
std::uint64_t iteration_flops(std::uint64_t n);

}  // namespace kmpc::boxqp
