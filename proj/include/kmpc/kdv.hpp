#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

namespace kmpc::kdv {

/// Periodic KdV plant  y_t + y y_x + y_xxx = sum_i u_i v_i(x)  on [-pi, pi)
/// with Gaussian actuator profiles v_i(x) = exp(-width (x - m_i)^2).
struct KdvConfig {
    int nodes = 128;
    double dt = 0.01;     ///< sampling step
    int substeps = 20;    ///< split-step substeps per sampling step
    std::vector<double> actuator_centers = {-std::numbers::pi / 2, -std::numbers::pi / 6,
                                            std::numbers::pi / 6, std::numbers::pi / 2};
    double actuator_width = 25.0;

    int n_inputs() const { return static_cast<int>(actuator_centers.size()); }

    /// Throws ConfigError unless nodes is a power of two >= 4, dt > 0 and
    /// substeps >= 1.
    void validate() const;
};

/// Grid, actuator profiles and FFT workspace for one trajectory. step() is a
/// pure function of (state, input) but reuses the workspace, so an instance
/// must not be shared between threads.
class KdvPlant {
public:
    explicit KdvPlant(KdvConfig cfg = {});

    const KdvConfig& config() const { return cfg_; }
    /// x_j = -pi + 2 pi j / M
    const Eigen::VectorXd& grid() const { return grid_; }
    /// M x n_inputs matrix whose columns are the sampled actuator profiles.
    const Eigen::MatrixXd& actuator_profiles() const { return profiles_; }

    /// sum_i u_i v_i on the grid.
    Eigen::VectorXd actuator_field(const Eigen::Ref<const Eigen::VectorXd>& u) const;

    /// sum_i c_i y_i^0 with y_1^0 = exp(-(x - pi/2)^2), y_2^0 = -sin^2(x/2),
    /// y_3^0 = exp(-(x + pi/2)^2), y_4^0 = cos^2(x/2).
    Eigen::VectorXd initial_profile(const Eigen::Ref<const Eigen::VectorXd>& coeffs) const;

    /// Advances one sampling step with the input held constant. Each substep
    /// is half a step of the affine flow y_t = -y_xxx + forcing (exact in
    /// Fourier space), one RK4 step of y_t = -(y^2/2)_x, and another affine
    /// half step. Throws PlantInstability on non-finite output.
    Eigen::VectorXd step(const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::VectorXd>& u);

private:
    using Complex = std::complex<double>;

    void linear_half(Eigen::VectorXd& y);
    void advection(const Eigen::VectorXd& y, Eigen::VectorXd& out);

    KdvConfig cfg_;
    Eigen::VectorXd grid_;
    Eigen::MatrixXd profiles_;

    Eigen::FFT<double> fft_;
    std::vector<Complex> half_dispersion_;    // exp(i k^3 dt_sub / 2)
    std::vector<Complex> half_forcing_gain_;  // (exp(i k^3 dt_sub / 2) - 1) / (i k^3)
    std::vector<Complex> forcing_spectrum_;
    std::vector<Complex> flux_derivative_;  // -i k / 2 inside the 2/3 band, else 0
    std::vector<Complex> spectrum_;
    Eigen::VectorXd scratch_;
    Eigen::VectorXd k1_, k2_, k3_, k4_, stage_;
};

Eigen::VectorXd actuator_field(const KdvConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& u);
Eigen::VectorXd initial_profile(const KdvConfig& cfg, const Eigen::Ref<const Eigen::VectorXd>& coeffs);
Eigen::VectorXd step(const KdvConfig& cfg,
                     const Eigen::Ref<const Eigen::VectorXd>& y,
                     const Eigen::Ref<const Eigen::VectorXd>& u);

}  // namespace kmpc::kdv
