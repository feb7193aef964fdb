#pragma once

#include <optional>

namespace phonon {

namespace constants {
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_B = 1.380649e-23;      // J / K
inline constexpr double two_pi = 6.283185307179586476925286766559;
} // namespace constants

/// How the position-diffusion coefficient of the bath is derived from (gamma, T_env).
enum class DiffusionModel {
    /// gamma * (n_env + 1/2): thermal fixed point at the Bose-Einstein occupancy.
    quantum,
    /// gamma * k_B T / (hbar omega): the classical Caldeira-Leggett coefficient.
    high_temperature,
};

/// Resonator and bath parameters. Frequencies are ordinary frequencies in Hz;
/// the angular accessors apply the 2*pi conversion.
struct SystemParams {
    double omega1_hz = 0.0;
    double omega2_hz = 0.0;
    double gamma_hz = 0.0;   // energy damping rate of resonator 2
    double t_env_k = 0.0;
    double mass2_kg = 0.0;   // documentation only
    double kappa_hz = 0.0;   // used by the detuning model only

    bool operator==(const SystemParams &) const = default;

    /// Throws std::invalid_argument on non-physical values.
    void validate() const;

    double omega1_angular() const { return constants::two_pi * omega1_hz; }
    double omega2_angular() const { return constants::two_pi * omega2_hz; }
    double delta_omega_hz() const { return omega2_hz - omega1_hz; }
    double delta_omega_angular() const { return constants::two_pi * delta_omega_hz(); }
    double gamma_angular() const { return constants::two_pi * gamma_hz; }

    /// Bose-Einstein occupancy of the bath at omega2.
    double n_env() const;

    /// Dimensionless decoherence coefficient gamma k_B T / (hbar omega2), i.e. D x_zpf^2 / hbar^2
    /// with D = 2 m gamma k_B T and x_zpf^2 = hbar / (2 m omega2).
    double lambda() const;

    /// Coefficient multiplying [x,[x,rho]] in dimensionless quadratures.
    double diffusion(DiffusionModel model) const;

    /// Coefficient multiplying i[x,{p,rho}] in dimensionless quadratures (gamma / 2).
    double damping() const { return 0.5 * gamma_angular(); }
};

struct DetectionParams {
    double eta = 1.0;
    std::optional<double> eta1;
    std::optional<double> eta2;
    double p = 0.0;
    double dark = 0.0;

    bool operator==(const DetectionParams &) const = default;

    void validate() const;
    /// True when p exceeds the advised small-excitation regime.
    bool p_warning() const { return p > 0.5; }
};

struct CouplingParams {
    double j_hz = 1.0;
    double jc_over_j = 0.0;
    double jh_over_j = 0.0;

    bool operator==(const CouplingParams &) const = default;

    void validate() const;
};

} // namespace phonon
