#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kmpc::koopman {

/// Building blocks of an observable dictionary, in the order they appear in
/// the lifted vector.
enum class ObservableBlock {
    state,            ///< x itself
    constant,         ///< the scalar 1
    shifted_product,  ///< x_i * x_{i-1} (indices mod n_x)
    square,           ///< x_i^2
};

/// Lifting map psi(x). The block order is part of the map's identity and is
/// written out with serialized predictors.
class ObservableMap {
public:
    ObservableMap() = default;
    ObservableMap(Eigen::Index n_x, std::vector<ObservableBlock> blocks);

    /// [x; 1; x .* shift(x); x .* x], n_psi = 3 n_x + 1.
    static ObservableMap shifted_quadratic(Eigen::Index n_x);
    /// psi(x) = x
    static ObservableMap identity(Eigen::Index n_x);

    /// Parses a comma-separated block list such as "state,constant,square".
    static ObservableMap parse(Eigen::Index n_x, const std::string& descriptor);
    std::string descriptor() const;

    Eigen::Index n_x() const { return n_x_; }
    Eigen::Index n_psi() const { return n_psi_; }
    const std::vector<ObservableBlock>& blocks() const { return blocks_; }

    /// True when the first n_x coordinates of psi(x) are x.
    bool leads_with_state() const;

    /// Throws InvalidInput if x has the wrong length.
    Eigen::VectorXd lift(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    void lift_into(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> psi) const;
    /// Lifts every column of X.
    Eigen::MatrixXd lift_columns(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    /// Multiplications spent by lift: n_x per product block and per square block.
    std::uint64_t lifting_flops() const;

private:
    Eigen::Index n_x_ = 0;
    Eigen::Index n_psi_ = 0;
    std::vector<ObservableBlock> blocks_;
};

inline Eigen::VectorXd lift(const ObservableMap& obs, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return obs.lift(x);
}

/// Transition triples (x_j, u_j, x_j^+) stored column-wise.
struct SnapshotDataset {
    Eigen::MatrixXd X;
    Eigen::MatrixXd U;
    Eigen::MatrixXd X_plus;

    Eigen::Index n_x() const { return X.rows(); }
    Eigen::Index n_u() const { return U.rows(); }
    Eigen::Index size() const { return X.cols(); }

    /// Throws InvalidInput on an empty dataset or mismatched shapes.
    void validate() const;
};

struct PredictorMatrices {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
};

/// psi_{k+1} = A psi_k + B u_k,  x_k ~ C psi_k.
struct LiftedPredictor {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    ObservableMap observable;

    Eigen::Index n_psi() const { return A.rows(); }
    Eigen::Index n_u() const { return B.cols(); }
    Eigen::Index n_x() const { return C.rows(); }

    void validate() const;
    /// C == [I, 0] exactly.
    bool output_is_state_projection() const;
};

enum class OutputFit { identity_projection, least_squares };

/// Minimum-Frobenius-norm W minimizing ||target - W * regressor||_F, computed
/// from the SVD of regressor^T with singular values at or below
/// rcond * sigma_max discarded. regressor is p x N_d, target m x N_d.
Eigen::MatrixXd min_norm_least_squares(const Eigen::Ref<const Eigen::MatrixXd>& regressor,
                                       const Eigen::Ref<const Eigen::MatrixXd>& target,
                                       double rcond = 1e-10);

/// EDMD: [A, B] = Psi^+ pinv([Psi; U]).
PredictorMatrices fit_predictor(const SnapshotDataset& data, const ObservableMap& obs);

/// Output map C. identity_projection returns [I, 0] and needs no data; it
/// throws if the dictionary does not lead with the state.
Eigen::MatrixXd fit_output(const SnapshotDataset& data, const ObservableMap& obs, OutputFit mode);

/// fit_predictor + fit_output bundled into a predictor.
LiftedPredictor identify(const SnapshotDataset& data, const ObservableMap& obs,
                         OutputFit mode = OutputFit::identity_projection);

Eigen::VectorXd predict(const LiftedPredictor& p,
                        const Eigen::Ref<const Eigen::VectorXd>& psi,
                        const Eigen::Ref<const Eigen::VectorXd>& u);

/// RMS over k = 1..K of ||C psi_k - truth_k|| with psi_0 = lift(x0) and
/// psi_k = predict(psi_{k-1}, inputs_{k-1}). inputs is n_u x K, truth n_x x K.
/// Returns 0 for K = 0.
double rollout_error(const LiftedPredictor& p,
                     const Eigen::Ref<const Eigen::VectorXd>& x0,
                     const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                     const Eigen::Ref<const Eigen::MatrixXd>& truth);

}  // namespace kmpc::koopman
