#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "kmpc/boxqp.hpp"
#include "kmpc/flops.hpp"
#include "kmpc/koopman.hpp"

namespace kmpc::mpc {

/// Tracking weights of the lifted MPC problem.
struct MpcWeights {
    int horizon = 10;
    Eigen::MatrixXd W_x;  ///< stage state weight, n_x x n_x, PSD
    Eigen::MatrixXd W_N;  ///< terminal state weight, n_x x n_x, PSD
    Eigen::MatrixXd W_u;  ///< input weight, n_u x n_u, PD

    void validate(Eigen::Index n_x, Eigen::Index n_u) const;
};

struct References {
    Eigen::VectorXd x_r;
    Eigen::VectorXd u_r;

    bool operator==(const References&) const = default;
};

/// Affine map between the unit box and the physical input box, per channel:
/// u = center + half_range .* z.
struct InputScaling {
    Eigen::VectorXd center;
    Eigen::VectorXd half_range;

    static InputScaling from_bounds(const Eigen::VectorXd& u_min, const Eigen::VectorXd& u_max);
    static InputScaling unit(Eigen::Index n_u);

    Eigen::Index n_u() const { return center.size(); }
    bool is_unit() const;
    void validate() const;

    /// Maps a stacked unit-box sequence (length a multiple of n_u) to physical
    /// inputs. Throws InvalidInput if any entry leaves [-1, 1] by more than 1e-9.
    Eigen::VectorXd to_physical(const Eigen::Ref<const Eigen::VectorXd>& z) const;
    /// Inverse of to_physical.
    Eigen::VectorXd to_unit(const Eigen::Ref<const Eigen::VectorXd>& u) const;
};

/// Offline part of the condensed problem. Immutable after build_condensed.
///
/// Stage i = 1..N of the prediction is psi_i = A^i psi_0 + drift_i + S_i z,
/// where z stacks the unit-box inputs. S has block (i, j) = A^{i-j} B D for
/// i >= j, with D = diag(half_range).
struct CondensedData {
    Eigen::Index horizon = 0;
    Eigen::Index n_u = 0;
    Eigen::Index n_x = 0;
    Eigen::Index n_psi = 0;

    Eigen::MatrixXd A;  ///< lifted dynamics, used by the on-line recurrence
    Eigen::MatrixXd C;
    Eigen::MatrixXd S;  ///< (N n_psi) x (N n_u)

    Eigen::MatrixXd stage_weight;     ///< C' W_x C, the first N-1 blocks of Qbar
    Eigen::MatrixXd terminal_weight;  ///< C' W_N C, the last block of Qbar
    Eigen::MatrixXd input_weight;     ///< D W_u D, each block of Rbar
    Eigen::MatrixXd W_x;
    Eigen::MatrixXd W_N;
    Eigen::MatrixXd W_u;

    Eigen::MatrixXd H;  ///< Rbar + S' Qbar S

    /// S' Qbar, n x (N n_psi). Block (j, i) vanishes for i < j.
    Eigen::MatrixXd lifted_gain;
    /// n x (N n_x) with block (j, i) = (C A^{i-j} B D)' W_i, so that
    /// S' Qbar stack(psi) = output_gain stack(C psi_i).
    Eigen::MatrixXd output_gain;

    InputScaling scaling;
    /// S' Qbar stack(drift); zero when the input box is centred at the origin.
    Eigen::VectorXd drift_image;
    /// C == [I, 0]: the on-line gradient then works on the state block only.
    bool state_projection = false;

    double zero_gradient_threshold = 0.0;

    Eigen::Index size() const { return horizon * n_u; }

    Eigen::MatrixXd dense_Qbar() const;
    Eigen::MatrixXd dense_Rbar() const;
};

/// Builds S, Qbar, Rbar and H offline. Throws ConfigError when H is not
/// positive definite.
CondensedData build_condensed(const koopman::LiftedPredictor& p,
                              const MpcWeights& w,
                              const InputScaling& scaling);
CondensedData build_condensed(const koopman::LiftedPredictor& p, const MpcWeights& w);

/// Reference-dependent part of the gradient:
/// S' stack(C' W_i x_r) - S' Qbar stack(drift) + stack(D W_u (u_r - center)).
/// Only changes when the references change.
Eigen::VectorXd reference_offset(const CondensedData& cd,
                                 const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                 const Eigen::Ref<const Eigen::VectorXd>& u_r,
                                 FlopCounter* flops = nullptr);

/// h = S' Qbar g - offset with g built from psi_k = A psi_{k-1}.
Eigen::VectorXd online_gradient(const CondensedData& cd,
                                const Eigen::Ref<const Eigen::VectorXd>& psi0,
                                const Eigen::Ref<const Eigen::VectorXd>& offset,
                                FlopCounter* flops = nullptr);

/// Convenience form that recomputes the reference offset.
Eigen::VectorXd online_gradient(const CondensedData& cd,
                                const Eigen::Ref<const Eigen::VectorXd>& psi0,
                                const Eigen::Ref<const Eigen::VectorXd>& x_r,
                                const Eigen::Ref<const Eigen::VectorXd>& u_r,
                                FlopCounter* flops = nullptr);

struct MpcStepResult {
    Eigen::VectorXd u0;       ///< first physical input, applied to the plant
    Eigen::VectorXd inputs;   ///< whole physical input sequence
    Eigen::VectorXd gradient; ///< h of the box QP
    boxqp::Solution solution;
};

/// Lift, assemble h, solve the box QP, unscale, keep the first stage.
MpcStepResult solve_mpc_step(const koopman::LiftedPredictor& p,
                             const CondensedData& cd,
                             const Eigen::Ref<const Eigen::VectorXd>& x_t,
                             const References& refs,
                             const boxqp::SolverConfig& cfg,
                             FlopCounter* flops = nullptr);

/// Receding-horizon controller holding the offline data. Caches the
/// reference offset and recomputes it only when the references change.
class KoopmanMpc {
public:
    KoopmanMpc(koopman::LiftedPredictor predictor, CondensedData condensed,
               boxqp::SolverConfig cfg = {});

    MpcStepResult step(const Eigen::Ref<const Eigen::VectorXd>& x_t,
                       const References& refs,
                       FlopCounter* flops = nullptr);

    const koopman::LiftedPredictor& predictor() const { return predictor_; }
    const CondensedData& condensed() const { return condensed_; }
    const boxqp::SolverConfig& config() const { return cfg_; }

private:
    koopman::LiftedPredictor predictor_;
    CondensedData condensed_;
    boxqp::SolverConfig cfg_;
    std::optional<References> cached_refs_;
    Eigen::VectorXd cached_offset_;
};

struct CertificateDims {
    std::int64_t n_u = 0;
    std::int64_t n_x = 0;
    std::int64_t n_psi = 0;
    std::int64_t horizon = 0;
    std::int64_t m_lifting = 0;
};

/// Worst-case on-line operation count of one control step.
struct Certificate {
    CertificateDims dims;
    std::int64_t n = 0;
    double epsilon = 0.0;
    int iterations = 0;

    std::uint64_t lifting_flops = 0;        ///< m_lifting
    std::uint64_t gradient_flops = 0;       ///< 2N n_psi^2 + N(N+1) n_u n_psi/2 + N n_x n_psi + N n_u^2 + 2n
    std::uint64_t norm_flops = 0;           ///< n
    std::uint64_t initialization_flops = 0; ///< 5n + 3
    std::uint64_t per_iteration_flops = 0;  ///< 1 + n^3/3 + n^2/2 + n/6 + 2n^2 + 15n
    std::uint64_t total_flops = 0;

    double flop_rate = 0.0;       ///< FLOP/s
    double execution_time = 0.0;  ///< total_flops / flop_rate, seconds

    std::string report() const;
};

/// Throws InvalidInput for nonpositive dimensions, epsilon outside (0, 2n) or
/// a nonpositive rate.
Certificate certificate(const CertificateDims& dims, double epsilon, double flop_rate = 1e9);

}  // namespace kmpc::mpc
