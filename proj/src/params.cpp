#include "phonon/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phonon {

namespace {

void require_probability(double v, const char *name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must lie in [0, 1], got " +
                                    std::to_string(v));
    }
}

void require_non_negative(double v, const char *name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be finite and >= 0");
    }
}

} // namespace

void SystemParams::validate() const {
    require_non_negative(omega1_hz, "omega1_hz");
    require_non_negative(omega2_hz, "omega2_hz");
    require_non_negative(gamma_hz, "gamma_hz");
    require_non_negative(t_env_k, "t_env_k");
    if (omega1_hz == omega2_hz) {
        throw std::invalid_argument("omega1_hz and omega2_hz must differ to produce a beat note");
    }
    if (omega2_hz <= 0.0) {
        throw std::invalid_argument("omega2_hz must be positive");
    }
}

double SystemParams::n_env() const {
    if (t_env_k <= 0.0) {
        return 0.0;
    }
    const double x = constants::hbar * omega2_angular() / (constants::k_B * t_env_k);
    return 1.0 / std::expm1(x);
}

double SystemParams::lambda() const {
    if (t_env_k <= 0.0) {
        return 0.0;
    }
    return gamma_angular() * constants::k_B * t_env_k / (constants::hbar * omega2_angular());
}

double SystemParams::diffusion(DiffusionModel model) const {
    switch (model) {
    case DiffusionModel::quantum:
        return gamma_angular() * (n_env() + 0.5);
    case DiffusionModel::high_temperature:
        return lambda();
    }
    return 0.0;
}

void DetectionParams::validate() const {
    require_probability(eta, "eta");
    require_probability(p, "p");
    require_probability(dark, "dark");
    if (eta1) {
        require_probability(*eta1, "eta1");
    }
    if (eta2) {
        require_probability(*eta2, "eta2");
    }
}

void CouplingParams::validate() const {
    if (!(j_hz > 0.0)) {
        throw std::invalid_argument("j_hz must be positive");
    }
    require_non_negative(jc_over_j, "jc_over_j");
    require_non_negative(jh_over_j, "jh_over_j");
}

} // namespace phonon
