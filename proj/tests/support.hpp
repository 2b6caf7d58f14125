#pragma once

// Random instance generators and brute-force oracles shared by the unit tests
// and the acceptance runner. Nothing here calls into the solver under test.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "kmpc/boxqp.hpp"
#include "kmpc/condensed_mpc.hpp"
#include "kmpc/koopman.hpp"

namespace kmpc::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    Eigen::MatrixXd normal_matrix(Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j) {
            for (Eigen::Index i = 0; i < r; ++i) {
                m(i, j) = normal();
            }
        }
        return m;
    }
    Eigen::VectorXd uniform_vector(Eigen::Index n, double lo, double hi) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = uniform(lo, hi);
        }
        return v;
    }

    /// G'G/n + shift*I with a random overall scale spanning two decades.
    Eigen::MatrixXd pd_matrix(Eigen::Index n, double shift = 0.2) {
        const Eigen::MatrixXd G = normal_matrix(n, n);
        Eigen::MatrixXd H = G.transpose() * G / static_cast<double>(n);
        H.diagonal().array() += shift;
        H *= std::pow(10.0, uniform(-1.0, 1.0));
        return 0.5 * (H + H.transpose());
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Minimizer of 1/2 z'Hz + h'z over [-1, 1]^n for positive definite H by
/// enumerating all 3^n patterns of active bounds. Each pattern fixes the
/// active coordinates at their bound, solves the reduced stationarity system
/// for the rest, and the best feasible candidate wins.
inline Eigen::VectorXd box_qp_oracle(const Eigen::MatrixXd& H, const Eigen::VectorXd& h) {
    const Eigen::Index n = h.size();
    std::vector<int> pattern(static_cast<std::size_t>(n), -1);
    Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
    double best_obj = std::numeric_limits<double>::infinity();
    for (;;) {
        std::vector<Eigen::Index> free_idx;
        Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int p = pattern[static_cast<std::size_t>(i)];
            if (p == 0) {
                free_idx.push_back(i);
            } else {
                z(i) = p;
            }
        }
        const auto nf = static_cast<Eigen::Index>(free_idx.size());
        bool feasible = true;
        if (nf > 0) {
            Eigen::MatrixXd Hff(nf, nf);
            Eigen::VectorXd rhs(nf);
            for (Eigen::Index a = 0; a < nf; ++a) {
                rhs(a) = -h(free_idx[a]);
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (pattern[static_cast<std::size_t>(i)] != 0) {
                        rhs(a) -= H(free_idx[a], i) * z(i);
                    }
                }
                for (Eigen::Index b = 0; b < nf; ++b) {
                    Hff(a, b) = H(free_idx[a], free_idx[b]);
                }
            }
            const Eigen::VectorXd zf = Hff.fullPivLu().solve(rhs);
            for (Eigen::Index a = 0; a < nf; ++a) {
                if (std::abs(zf(a)) > 1.0 + 1e-12) {
                    feasible = false;
                }
                z(free_idx[a]) = zf(a);
            }
        }
        if (feasible) {
            const double obj = 0.5 * z.dot(H * z) + h.dot(z);
            if (obj < best_obj) {
                best_obj = obj;
                best = z;
            }
        }
        // next pattern in base 3
        Eigen::Index i = 0;
        while (i < n && pattern[static_cast<std::size_t>(i)] == 1) {
            pattern[static_cast<std::size_t>(i)] = -1;
            ++i;
        }
        if (i == n) {
            break;
        }
        ++pattern[static_cast<std::size_t>(i)];
    }
    return best;
}

/// Block-lower-triangular prediction matrix assembled from explicit matrix
/// powers: block (i, j) = A^{i-j} B for i >= j.
inline Eigen::MatrixXd dense_prediction_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                               Eigen::Index N) {
    const Eigen::Index np = A.rows();
    const Eigen::Index nu = B.cols();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(N * np, N * nu);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            Eigen::MatrixXd P = Eigen::MatrixXd::Identity(np, np);
            for (Eigen::Index k = 0; k < i - j; ++k) {
                P = P * A;
            }
            S.block(i * np, j * nu, np, nu) = P * B;
        }
    }
    return S;
}

/// Positive definite Hessian with a gradient whose size is comparable to the
/// curvature, so the minimizer mixes free and active coordinates.
inline boxqp::BoxQP random_box_qp(Rng& rng, Eigen::Index n) {
    boxqp::BoxQP qp{rng.pd_matrix(n), Eigen::VectorXd()};
    qp.h = rng.uniform_vector(n, -2.0, 2.0) * qp.H.diagonal().mean() * rng.uniform(0.2, 3.0);
    return qp;
}

/// v's computed from the raw vectors rather than from the iterate's helpers.
inline double gap_of(const boxqp::SolverIterate& it) {
    return (it.gamma.array() * it.alpha.array()).sum() + (it.theta.array() * it.omega.array()).sum();
}

/// ||tau e - sqrt(v s)|| / tau from the raw vectors.
inline double xi_of(const boxqp::SolverIterate& it, double tau) {
    Eigen::VectorXd beta(2 * it.size());
    beta << (it.gamma.array() * it.alpha.array()).sqrt().matrix(),
        (it.theta.array() * it.omega.array()).sqrt().matrix();
    return (Eigen::VectorXd::Constant(beta.size(), tau) - beta).norm() / tau;
}

inline Eigen::MatrixXd random_psd(Rng& rng, Eigen::Index n) {
    const Eigen::MatrixXd G = rng.normal_matrix(n, n);
    return G * G.transpose() / static_cast<double>(n);
}

struct SmallProblem {
    koopman::LiftedPredictor p;
    mpc::MpcWeights w;
    mpc::InputScaling scaling;
};

/// n_psi <= 4, N <= 3, with either the exact state projection or a dense C.
inline SmallProblem random_small_problem(Rng& rng) {
    static const char* kDescriptors[] = {"state,constant", "state,constant,square",
                                         "state,constant,shifted_product,square"};
    SmallProblem s;
    const int pick = rng.integer(0, 3);
    s.p.observable = pick < 3 ? koopman::ObservableMap::parse(1, kDescriptors[pick])
                              : koopman::ObservableMap::parse(2, "state,constant");
    const Eigen::Index np = s.p.observable.n_psi();
    const Eigen::Index nx = s.p.observable.n_x();
    const Eigen::Index nu = rng.integer(1, 2);
    s.p.A = 0.6 * rng.normal_matrix(np, np);
    s.p.B = rng.normal_matrix(np, nu);
    if (rng.uniform() < 0.5) {
        s.p.C = Eigen::MatrixXd::Zero(nx, np);
        s.p.C.leftCols(nx).setIdentity();
    } else {
        s.p.C = rng.normal_matrix(nx, np);
    }
    s.w.horizon = rng.integer(1, 3);
    s.w.W_x = random_psd(rng, nx);
    s.w.W_N = random_psd(rng, nx);
    s.w.W_u = random_psd(rng, nu) + 0.1 * Eigen::MatrixXd::Identity(nu, nu);
    if (rng.uniform() < 0.5) {
        s.scaling = mpc::InputScaling::unit(nu);
    } else {
        const Eigen::VectorXd lo = rng.uniform_vector(nu, -3.0, 0.0);
        s.scaling = mpc::InputScaling::from_bounds(lo, lo + rng.uniform_vector(nu, 0.5, 4.0));
    }
    return s;
}

/// Expanded tracking cost of a physical input sequence by explicit rollout.
inline double rollout_cost(const SmallProblem& s, const Eigen::VectorXd& psi0,
                           const Eigen::VectorXd& x_r, const Eigen::VectorXd& u_r,
                           const Eigen::VectorXd& inputs) {
    const Eigen::Index N = s.w.horizon;
    const Eigen::Index nu = s.p.n_u();
    Eigen::VectorXd psi = psi0;
    double J = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        const Eigen::VectorXd u = inputs.segment(i * nu, nu);
        J += (u - u_r).dot(s.w.W_u * (u - u_r));
        psi = s.p.A * psi + s.p.B * u;
        const Eigen::VectorXd e = s.p.C * psi - x_r;
        J += e.dot((i + 1 < N ? s.w.W_x : s.w.W_N) * e);
    }
    return J;
}

/// Samples from psi+ = A0 psi + B0 u in the [x; 1] dictionary. The constant
/// row of A0 is e_last so the successor is again a valid lifted state.
struct LinearLiftedSystem {
    Eigen::MatrixXd A0;
    Eigen::MatrixXd B0;
    koopman::SnapshotDataset data;
};

inline LinearLiftedSystem linear_lifted_system(Rng& rng, Eigen::Index nx, Eigen::Index nu,
                                               Eigen::Index nd) {
    const Eigen::Index np = nx + 1;
    LinearLiftedSystem s;
    s.A0 = 0.5 * rng.normal_matrix(np, np);
    s.A0.row(nx).setZero();
    s.A0(nx, nx) = 1.0;
    s.B0 = rng.normal_matrix(np, nu);
    s.B0.row(nx).setZero();
    s.data.X = rng.normal_matrix(nx, nd);
    s.data.U = rng.normal_matrix(nu, nd);
    Eigen::MatrixXd psi(np, nd);
    psi << s.data.X, Eigen::MatrixXd::Ones(1, nd);
    s.data.X_plus = (s.A0 * psi + s.B0 * s.data.U).topRows(nx);
    return s;
}

}  // namespace kmpc::testing
