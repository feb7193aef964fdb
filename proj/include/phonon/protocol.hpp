#pragma once

#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "phonon/channels.hpp"
#include "phonon/dynamics.hpp"
#include "phonon/fock.hpp"
#include "phonon/params.hpp"

namespace phonon {

enum class Propagator {
    rk4,            // fixed-step integration of the master equation
    secular_exact,  // closed-form exponential of the secular generator
};

struct ProtocolConfig {
    SystemParams system;
    DetectionParams detection;
    CouplingParams coupling;
    HeraldModel herald;
    ThermalOccupancy n_th;
    std::vector<double> tau_grid;
    FockBasis basis{3, 3};
    IntegratorConfig integrator;
    Propagator propagator = Propagator::rk4;
    double theta = std::numbers::pi / 4.0;
    /// Warn unless consecutive delays are at most a beat period / 8 apart.
    bool require_beat_resolution = true;
    TruncationCheck thermal_check = TruncationCheck::warn;
    int threads = 1;

    bool operator==(const ProtocolConfig &) const = default;
    void validate() const;
};

struct ReadoutTrace {
    std::vector<double> tau;
    std::vector<double> R;   // eta * <n1> after the second splitter
    std::vector<double> n1;  // pre-detection occupancies
    std::vector<double> n2;
    std::vector<double> leak1;  // top-level population before the second splitter
    std::vector<double> leak2;
    double eta = 1.0;
    double beat_hz = 0.0;
    double n_env = 0.0;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return tau.size(); }
};

/// Steps (i)-(ii) and the first splitter pulse with its cooling/heating contamination.
/// The returned state lives on config.basis.
DensityMatrix prepare_split_state(const ProtocolConfig &config,
                                  std::vector<std::string> *warnings = nullptr);

/// Splitter pulse on a state of any basis: embeds into the square basis that holds every
/// occupied number sector completely, applies S(theta), then cooling and heating.
/// The result stays on the enlarged square basis.
DensityMatrix splitter_pulse(const DensityMatrix &rho, double theta,
                             const CouplingParams &coupling);

ReadoutTrace run_protocol(const ProtocolConfig &config);

struct AnalyticModel {
    double tau_d = 1.0;
    double tau_th = 1.0;
    double n_env = 0.0;
    double delta_omega_hz = 0.0;
    double eta = 1.0;

    void validate() const;
};

/// eta * [1/2 - cos(dw tau) exp(-tau/tau_d)/2 + (n_env - 1/2)(1 - exp(-tau/tau_th))].
double analytic_readout(const AnalyticModel &model, double tau);

/// (R_max - R_min) / (R_max + R_min) over the first beat period of the trace.
double extract_visibility(const ReadoutTrace &trace);

struct DecayFit {
    double tau_d = 0.0;
    double tau_th = 0.0;
    bool tau_d_lower_bound = false;  // fit ran past the sampled window
    bool tau_th_lower_bound = false;
    double residual_norm = 0.0;      // ||model - R||_2
    double rms_over_eta = 0.0;       // RMS residual / eta
    bool converged = false;
    int iterations = 0;
    std::string message;
};

/// Levenberg-Marquardt fit of the analytic readout (n_env, beat and eta taken from the trace)
/// over (tau_d, tau_th). Non-convergence is reported in the result, never silently.
DecayFit fit_decay(const ReadoutTrace &trace);

struct PulseAreaCheck {
    double area = 0.0;
    double target = std::numbers::pi / 2.0;
    double relative_error = 0.0;
    bool pass = false;
    bool exponential_shape = false;
    /// Set when the envelope is not exponential; exponential pulses give a more even interaction.
    bool recommend_exponential = false;
};

/// Trapezoidal area of n_cav(t) * g1 (g1 in Hz, converted to rad/s) against pi/2 with 1% tolerance.
PulseAreaCheck validate_pulse_area(std::span<const double> times_s, std::span<const double> n_cav,
                                   double g1_hz);

} // namespace phonon
