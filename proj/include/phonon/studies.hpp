#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phonon/protocol.hpp"

namespace phonon {

/// Visibility below this is treated as an infeasible experiment.
inline constexpr double feasibility_threshold = 0.10;

enum class SweepParameter { n_th, p, dark, jc_over_j, jh_over_j };

std::string to_string(SweepParameter parameter);
/// Accepts "n_th", "p", "dark", "jc_over_j", "jh_over_j"; throws std::invalid_argument otherwise.
SweepParameter parse_sweep_parameter(const std::string &name);

/// Writes one imperfection value into a config. n_th sets both modes; p and dark set the
/// detection and herald fields together.
void apply_parameter(ProtocolConfig &config, SweepParameter parameter, double value);

struct SweepAxis {
    std::string name;
    std::vector<double> values;

    bool operator==(const SweepAxis &) const = default;
};

struct SweepCell {
    std::vector<double> coords;  // one per axis
    double visibility = 0.0;     // NaN when the cell failed or was masked
    bool feasible = false;
    bool masked = false;
    std::string error;
    ProtocolConfig inputs;       // the exact config this cell ran
    std::map<std::string, double> extras;
};

struct SweepGrid {
    std::vector<SweepAxis> axes;
    std::vector<SweepCell> cells;  // row-major over axes, last axis fastest
    double threshold = feasibility_threshold;

    std::size_t size() const noexcept { return cells.size(); }
    /// Cell at axis indices (i) or (i, j).
    const SweepCell &at(std::size_t i, std::size_t j = 0) const;
};

struct SweepOptions {
    int threads = 1;
    double threshold = feasibility_threshold;
};

/// Runs run_protocol + extract_visibility per cell over one or two axes. Cell failures are
/// recorded in the cell; the grid always completes. Values do not depend on the thread count.
SweepGrid sweep_visibility(const ProtocolConfig &base, const std::vector<SweepAxis> &axes,
                           const SweepOptions &options = {});

/// Visibility of a single configuration, as computed for one sweep cell.
SweepCell run_cell(const ProtocolConfig &config, double threshold = feasibility_threshold);

/// Sideband geometry for the detuning study: both beams sit at an offset delta from their
/// respective red sidebands (delta = 0 drives the sidebands resonantly).
struct DetuningParams {
    double omega1_over_kappa = 10.0;
    double omega2_over_omega1 = 2.0;

    bool operator==(const DetuningParams &) const = default;
    void validate() const;
};

struct DetuningRates {
    double j = 0.0;  // exchange rate, arbitrary units
    double jc_over_j = 0.0;
    double jh_over_j = 0.0;
    bool finite = true;
};

/// J ~ |d| / (d^2 + (kappa/2)^2); cooling and heating from Lorentzian overlap of each beam
/// (at w_j + d) with each mode's anti-Stokes (-w_i) and Stokes (+w_i) line, on the same scale.
/// delta and all frequencies in units of kappa.
DetuningRates detuning_rates(double delta_over_kappa, const DetuningParams &params);

/// One axis "delta_over_kappa". Cells with jc + jh >= j (or non-finite rates) are masked and not
/// simulated. Extras: j_normalized (to the grid maximum), jc_over_j, jh_over_j.
SweepGrid detuning_sweep(const ProtocolConfig &base, const std::vector<double> &delta_over_kappa,
                         const DetuningParams &params, const SweepOptions &options = {});

struct Snapshot {
    double tau = 0.0;
    DensityMatrix rho;
};

/// State after the first splitter pulse, evolved to each time and exported in `frame`.
/// Times must be non-negative; they are processed in sorted order and returned as given.
std::vector<Snapshot> snapshot_sequence(const ProtocolConfig &config,
                                        const std::vector<double> &times,
                                        Frame frame = Frame::rotating);

/// Sum of |rho_ab| over a != b.
double off_diagonal_magnitude(const DensityMatrix &rho);

struct TimingParams {
    double n_a = 1000;
    double n_p = 30;
    double t12_s = 1e-6;
    double ttot_s = 1e-6;
    double eta = 0.01;
    double p = 0.01;
    std::optional<double> eta1;
    std::optional<double> eta2;

    void validate() const;
};

enum class TimingMode { single, two_detector };

struct TimingEstimate {
    double exact_s = 0.0;
    double approx_s = 0.0;
    double postselection_s = 0.0;  // the t12 term alone
};

/// single:  T = na np (t12 (1 - eta p) / (eta^2 p) + ttot eta p / eta),  T ~ na np t12 / (eta^2 p)
/// two_detector substitutes the herald efficiency eta1 and the readout efficiency eta2:
///          T = na np (t12 (1 - eta1 p) / (eta1 eta2 p) + ttot eta1 p / eta2)
TimingEstimate timing_estimate(const TimingParams &params, TimingMode mode = TimingMode::single);

enum class Band { pass, warn, fail };
std::string to_string(Band band);

struct CountingReport {
    double product = 0.0;  // eta * n_env
    Band band = Band::pass;
};

/// Bands on eta * n_env: pass < 0.1, warn < 1, fail otherwise.
CountingReport counting_constraint(double eta, double n_env);

} // namespace phonon
