#include "kmpc/kdv.hpp"

#include <cmath>

#include "kmpc/errors.hpp"

namespace kmpc::kdv {

using Eigen::VectorXd;

void KdvConfig::validate() const {
    if (nodes < 4 || (nodes & (nodes - 1)) != 0) {
        throw ConfigError("KdV grid size must be a power of two >= 4");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("KdV sampling step must be positive");
    }
    if (substeps < 1) {
        throw ConfigError("KdV substeps must be at least 1");
    }
    if (actuator_centers.empty() || !(actuator_width > 0.0)) {
        throw ConfigError("KdV actuators need at least one profile with positive width");
    }
}

KdvPlant::KdvPlant(KdvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int M = cfg_.nodes;
    constexpr double pi = std::numbers::pi;

    grid_.resize(M);
    for (int j = 0; j < M; ++j) {
        grid_(j) = -pi + 2.0 * pi * j / M;
    }
    profiles_.resize(M, cfg_.n_inputs());
    for (int i = 0; i < cfg_.n_inputs(); ++i) {
        const double m = cfg_.actuator_centers[static_cast<std::size_t>(i)];
        profiles_.col(i) = (-cfg_.actuator_width * (grid_.array() - m).square()).exp();
    }

    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    const int bins = M / 2 + 1;
    const double dt_sub = cfg_.dt / cfg_.substeps;
    const double cutoff = M / 3.0;
    half_dispersion_.resize(static_cast<std::size_t>(bins));
    half_forcing_gain_.resize(static_cast<std::size_t>(bins));
    flux_derivative_.resize(static_cast<std::size_t>(bins));
    for (int k = 0; k < bins; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        // The Nyquist mode has no odd-derivative contribution.
        const double kk = k == M / 2 ? 0.0 : static_cast<double>(k);
        const double omega = kk * kk * kk;
        half_dispersion_[idx] = std::polar(1.0, omega * dt_sub / 2.0);
        // integral of exp(i omega s) over [0, dt_sub / 2]
        half_forcing_gain_[idx] = omega == 0.0 ? Complex(dt_sub / 2.0, 0.0)
                                               : (half_dispersion_[idx] - 1.0) / Complex(0.0, omega);
        flux_derivative_[idx] = kk <= cutoff ? Complex(0.0, -0.5 * kk) : Complex(0.0, 0.0);
    }
    spectrum_.resize(static_cast<std::size_t>(bins));
    forcing_spectrum_.resize(static_cast<std::size_t>(bins));
    scratch_.resize(M);
    k1_.resize(M);
    k2_.resize(M);
    k3_.resize(M);
    k4_.resize(M);
    stage_.resize(M);
}

VectorXd KdvPlant::actuator_field(const Eigen::Ref<const VectorXd>& u) const {
    if (u.size() != profiles_.cols()) {
        throw InvalidInput("actuator_field: expected " + std::to_string(profiles_.cols()) +
                           " inputs, got " + std::to_string(u.size()));
    }
    return profiles_ * u;
}

VectorXd KdvPlant::initial_profile(const Eigen::Ref<const VectorXd>& coeffs) const {
    if (coeffs.size() != 4) {
        throw InvalidInput("initial_profile: expected 4 coefficients");
    }
    constexpr double pi = std::numbers::pi;
    const auto x = grid_.array();
    const Eigen::ArrayXd half_sin = (x / 2.0).sin();
    const Eigen::ArrayXd half_cos = (x / 2.0).cos();
    return (coeffs(0) * (-(x - pi / 2).square()).exp() - coeffs(1) * half_sin.square() +
            coeffs(2) * (-(x + pi / 2).square()).exp() + coeffs(3) * half_cos.square())
        .matrix();
}

// Exact flow of y_t = -y_xxx + forcing over half a substep.
void KdvPlant::linear_half(VectorXd& y) {
    const auto M = static_cast<Eigen::Index>(cfg_.nodes);
    fft_.fwd(spectrum_.data(), y.data(), M);
    for (std::size_t k = 0; k < spectrum_.size(); ++k) {
        spectrum_[k] = half_dispersion_[k] * spectrum_[k] + half_forcing_gain_[k] * forcing_spectrum_[k];
    }
    fft_.inv(y.data(), spectrum_.data(), M);
}

// out = -(y^2 / 2)_x with the flux spectrum truncated to |k| <= M/3
void KdvPlant::advection(const VectorXd& y, VectorXd& out) {
    const auto M = static_cast<Eigen::Index>(cfg_.nodes);
    scratch_ = y.cwiseAbs2();
    fft_.fwd(spectrum_.data(), scratch_.data(), M);
    for (std::size_t k = 0; k < spectrum_.size(); ++k) {
        spectrum_[k] *= flux_derivative_[k];
    }
    fft_.inv(out.data(), spectrum_.data(), M);
}

VectorXd KdvPlant::step(const Eigen::Ref<const VectorXd>& y0, const Eigen::Ref<const VectorXd>& u) {
    if (y0.size() != cfg_.nodes) {
        throw InvalidInput("KdV state has length " + std::to_string(y0.size()) + ", expected " +
                           std::to_string(cfg_.nodes));
    }
    if (!y0.allFinite()) {
        throw PlantInstability("KdV state is not finite", 0);
    }
    scratch_ = actuator_field(u);
    fft_.fwd(forcing_spectrum_.data(), scratch_.data(), static_cast<Eigen::Index>(cfg_.nodes));
    const double h = cfg_.dt / cfg_.substeps;
    VectorXd y = y0;
    for (int s = 0; s < cfg_.substeps; ++s) {
        linear_half(y);

        advection(y, k1_);
        stage_ = y + (h / 2) * k1_;
        advection(stage_, k2_);
        stage_ = y + (h / 2) * k2_;
        advection(stage_, k3_);
        stage_ = y + h * k3_;
        advection(stage_, k4_);
        y += (h / 6) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);

        linear_half(y);
        if (!y.allFinite()) {
            throw PlantInstability("KdV integration blew up", s + 1);
        }
    }
    return y;
}

VectorXd actuator_field(const KdvConfig& cfg, const Eigen::Ref<const VectorXd>& u) {
    return KdvPlant(cfg).actuator_field(u);
}

VectorXd initial_profile(const KdvConfig& cfg, const Eigen::Ref<const VectorXd>& coeffs) {
    return KdvPlant(cfg).initial_profile(coeffs);
}

VectorXd step(const KdvConfig& cfg, const Eigen::Ref<const VectorXd>& y,
              const Eigen::Ref<const VectorXd>& u) {
    KdvPlant plant(cfg);
    return plant.step(y, u);
}

}  // namespace kmpc::kdv
