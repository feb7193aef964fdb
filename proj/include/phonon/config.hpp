#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phonon/protocol.hpp"
#include "phonon/studies.hpp"

namespace phonon {

enum class OutputFormat { csv, json };

enum class PulseShape { rectangular, exponential };

/// Sampled readout envelope for validate-pulse.
struct PulseSpec {
    PulseShape shape = PulseShape::rectangular;
    double duration_s = 1e-6;  // rectangular length, or sampled window for exponential
    double n_cav = 1.0;        // peak cavity photon number
    double decay_s = 1e-7;     // exponential time constant
    int samples = 1001;
    double g1_hz = 0.0;

    bool operator==(const PulseSpec &) const = default;
    void validate() const;
};

/// Flat key = value configuration shared by every subcommand.
struct RunConfig {
    ProtocolConfig protocol;

    // sweep
    std::vector<SweepAxis> axes;
    double threshold = feasibility_threshold;

    // detuning
    std::vector<double> delta_over_kappa;
    DetuningParams detuning;

    // snapshot
    std::vector<double> snapshot_times_s;
    Frame snapshot_frame = Frame::rotating;

    // timing (eta, p, eta1, eta2 come from the detection block)
    double n_a = 1000;
    double n_p = 30;
    double t12_s = 1e-6;
    double ttot_s = 1e-6;
    TimingMode timing_mode = TimingMode::single;

    // analytic
    std::optional<double> tau_d_s;
    std::optional<double> tau_th_s;
    bool analytic_fit = false;

    PulseSpec pulse;

    std::string out_dir = ".";
    OutputFormat format = OutputFormat::csv;

    bool operator==(const RunConfig &) const = default;

    TimingParams timing() const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown or repeated keys, malformed
/// values and half-specified linear grids throw ConfigError naming the key.
RunConfig parse_config(const std::string &text);
RunConfig load_config(const std::string &path);

/// Every key with its current value; parse_config(emit_config(c)) == c.
std::string emit_config(const RunConfig &config);

/// All keys parse_config accepts.
const std::vector<std::string> &config_keys();

std::vector<double> pulse_times(const PulseSpec &pulse);
std::vector<double> pulse_envelope(const PulseSpec &pulse);

} // namespace phonon
