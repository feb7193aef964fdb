#include "phonon/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "phonon/error.hpp"
#include "phonon/parallel.hpp"

namespace phonon {

void ProtocolConfig::validate() const {
    system.validate();
    detection.validate();
    coupling.validate();
    herald.validate();
    integrator.validate();
    if (!(n_th.n1 >= 0.0) || !(n_th.n2 >= 0.0)) {
        throw std::invalid_argument("n_th must be >= 0 for both modes");
    }
    if (tau_grid.empty()) {
        throw std::invalid_argument("tau grid is empty");
    }
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] >= 0.0) || !std::isfinite(tau_grid[i])) {
            throw std::invalid_argument("tau grid values must be finite and >= 0");
        }
        if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) {
            throw std::invalid_argument("tau grid must be strictly increasing");
        }
    }
    if (threads < 1) {
        throw std::invalid_argument("threads must be >= 1");
    }
    if (!std::isfinite(theta)) {
        throw std::invalid_argument("theta must be finite");
    }
}

namespace {

void check_bath_level(const DensityMatrix &rho, const SystemParams &system, const LeakagePolicy &policy,
                      const char *stage, std::vector<std::string> *warnings) {
    if (system.gamma_hz > 0.0) {
        enforce_leakage(top_level_population(rho).mode2, policy, stage, warnings);
    }
}

FockBasis splitter_basis(const FockBasis &basis) {
    const int m = basis.n1_max() + basis.n2_max();
    return FockBasis(m, m);
}

void append_unique(std::vector<std::string> &into, const std::vector<std::string> &from) {
    for (const auto &w : from) {
        if (std::find(into.begin(), into.end(), w) == into.end()) {
            into.push_back(w);
        }
    }
}

} // namespace

DensityMatrix splitter_pulse(const DensityMatrix &rho, double theta,
                             const CouplingParams &coupling) {
    const FockBasis big = splitter_basis(rho.basis());
    DensityMatrix out = apply_beam_splitter(embed(rho, big), theta);
    out = cooling_channel(out, coupling.jc_over_j);
    return heating_channel(out, coupling.jh_over_j);
}

DensityMatrix prepare_split_state(const ProtocolConfig &config,
                                  std::vector<std::string> *warnings) {
    config.validate();
    const auto &policy = config.integrator.leakage;
    const auto &basis = config.basis;
    if (basis.n1_max() < config.herald.max_order) {
        std::ostringstream msg;
        msg << "herald max_order " << config.herald.max_order << " needs n1_max >= "
            << config.herald.max_order << " (basis has n1_max=" << basis.n1_max() << ")";
        throw std::invalid_argument(msg.str());
    }
    DensityMatrix rho = thermal_state(config.n_th, basis, config.thermal_check, warnings);
    const double tail = std::max(thermal_truncated_weight(config.n_th.n1, basis.n1_max()),
                                 thermal_truncated_weight(config.n_th.n2, basis.n2_max()));
    enforce_leakage(tail, policy, "thermal state (weight beyond basis)", warnings);

    // Herald on a basis tall enough for every branch, then count what falls off.
    const FockBasis tall(basis.n1_max() + config.herald.max_order, basis.n2_max());
    auto [heralded, herald_drop] = crop(heralded_excitation(embed(rho, tall), config.herald), basis);
    enforce_leakage(herald_drop, policy, "heralded state (population beyond basis)", warnings);

    auto [split, split_drop] = crop(splitter_pulse(heralded, config.theta, config.coupling), basis);
    enforce_leakage(split_drop, policy, "first splitter pulse (population beyond basis)", warnings);
    return split;
}

ReadoutTrace run_protocol(const ProtocolConfig &config) {
    config.validate();
    ReadoutTrace trace;
    trace.eta = config.detection.eta;
    trace.beat_hz = config.system.delta_omega_hz();
    trace.n_env = config.system.n_env();
    auto &warnings = trace.warnings;

    if (config.detection.p_warning()) {
        warnings.push_back("p > 0.5: multi-phonon herald contamination dominates");
    }
    if (config.require_beat_resolution && config.tau_grid.size() > 1) {
        const double period = 1.0 / std::abs(trace.beat_hz);
        double widest = 0.0;
        for (std::size_t i = 1; i < config.tau_grid.size(); ++i) {
            widest = std::max(widest, config.tau_grid[i] - config.tau_grid[i - 1]);
        }
        if (widest > period / 8.0 * (1.0 + 1e-9)) {
            std::ostringstream msg;
            msg << "tau grid under-resolves the beat: widest spacing " << widest
                << " s exceeds period/8 = " << period / 8.0 << " s";
            warnings.push_back(msg.str());
        }
    }

    const DensityMatrix split = prepare_split_state(config, &warnings);
    const std::size_t count = config.tau_grid.size();
    std::vector<DensityMatrix> evolved;
    evolved.reserve(count);

    if (config.propagator == Propagator::rk4) {
        auto result = evolve_samples(split, config.tau_grid, config.system, config.integrator);
        append_unique(warnings, result.warnings);
        for (auto &s : result.samples) {
            evolved.push_back(std::move(s.rho));
        }
    } else {
        const auto generator =
            secular_rates(config.basis, config.system, config.integrator.diffusion);
        std::vector<std::optional<DensityMatrix>> slots(count);
        std::vector<std::vector<std::string>> slot_warnings(count);
        parallel_for(count, config.threads, [&](std::size_t i) {
            DensityMatrix rho = evolve_secular(generator, split, config.tau_grid[i], config.system);
            check_bath_level(rho, config.system, config.integrator.leakage, "free evolution", &slot_warnings[i]);
            slots[i].emplace(std::move(rho));
        });
        for (std::size_t i = 0; i < count; ++i) {
            append_unique(warnings, slot_warnings[i]);
            evolved.push_back(std::move(*slots[i]));
        }
    }

    trace.tau = config.tau_grid;
    trace.R.assign(count, 0.0);
    trace.n1.assign(count, 0.0);
    trace.n2.assign(count, 0.0);
    trace.leak1.assign(count, 0.0);
    trace.leak2.assign(count, 0.0);
    parallel_for(count, config.threads, [&](std::size_t i) {
        const auto leak = top_level_population(evolved[i]);
        trace.leak1[i] = leak.mode1;
        trace.leak2[i] = leak.mode2;
        const DensityMatrix out = splitter_pulse(evolved[i], config.theta, config.coupling);
        trace.n1[i] = expected_occupancy(out, Mode::one);
        trace.n2[i] = expected_occupancy(out, Mode::two);
        trace.R[i] = trace.eta * trace.n1[i];
    });
    return trace;
}

void AnalyticModel::validate() const {
    if (!(tau_d > 0.0) || !(tau_th > 0.0)) {
        throw std::invalid_argument("tau_d and tau_th must be positive");
    }
}

double analytic_readout(const AnalyticModel &model, double tau) {
    const double dw = constants::two_pi * model.delta_omega_hz;
    const double coherent = 0.5 - 0.5 * std::cos(dw * tau) * std::exp(-tau / model.tau_d);
    const double thermal = (model.n_env - 0.5) * -std::expm1(-tau / model.tau_th);
    return model.eta * (coherent + thermal);
}

double extract_visibility(const ReadoutTrace &trace) {
    if (trace.beat_hz == 0.0) {
        throw std::invalid_argument("trace has no beat frequency");
    }
    if (trace.tau.empty() || trace.R.size() != trace.tau.size()) {
        throw std::invalid_argument("insufficient grid: trace is empty or inconsistent");
    }
    const double period = 1.0 / std::abs(trace.beat_hz);
    const double start = trace.tau.front();
    if (start > period / 8.0) {
        throw std::invalid_argument("insufficient grid: trace must start within the first beat period");
    }
    if (trace.tau.back() < start + period * (1.0 - 1e-9)) {
        std::ostringstream msg;
        msg << "insufficient grid: trace spans " << trace.tau.back() - start
            << " s, less than one beat period (" << period << " s)";
        throw std::invalid_argument(msg.str());
    }
    double r_max = -std::numeric_limits<double>::infinity();
    double r_min = std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    for (std::size_t i = 0; i < trace.tau.size(); ++i) {
        if (trace.tau[i] > start + period * (1.0 + 1e-9)) {
            break;
        }
        r_max = std::max(r_max, trace.R[i]);
        r_min = std::min(r_min, trace.R[i]);
        ++used;
    }
    if (used < 8) {
        throw std::invalid_argument("insufficient grid: fewer than 8 samples in the first beat period");
    }
    if (!(r_max + r_min > 0.0)) {
        throw EngineError("visibility undefined: readout is zero over the first beat period");
    }
    return (r_max - r_min) / (r_max + r_min);
}

PulseAreaCheck validate_pulse_area(std::span<const double> times_s, std::span<const double> n_cav,
                                   double g1_hz) {
    if (times_s.size() != n_cav.size() || times_s.size() < 2) {
        throw std::invalid_argument("pulse needs at least two (time, n_cav) samples of equal length");
    }
    PulseAreaCheck check;
    const double g1 = constants::two_pi * g1_hz;
    for (std::size_t i = 1; i < times_s.size(); ++i) {
        const double dt = times_s[i] - times_s[i - 1];
        if (!(dt > 0.0)) {
            throw std::invalid_argument("pulse times must be strictly increasing");
        }
        check.area += 0.5 * dt * (n_cav[i] + n_cav[i - 1]) * g1;
    }
    check.relative_error = std::abs(check.area - check.target) / check.target;
    check.pass = check.relative_error <= 0.01;

    // Exponential if ln n_cav is linear in t with negative slope over the positive samples.
    double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < times_s.size(); ++i) {
        if (n_cav[i] > 0.0) {
            const double y = std::log(n_cav[i]);
            st += times_s[i];
            sy += y;
            stt += times_s[i] * times_s[i];
            sty += times_s[i] * y;
            syy += y * y;
            ++m;
        }
    }
    if (m >= 3) {
        const double nm = static_cast<double>(m);
        const double cov = sty - st * sy / nm;
        const double var_t = stt - st * st / nm;
        const double var_y = syy - sy * sy / nm;
        if (var_t > 0.0 && var_y > 0.0) {
            const double r2 = cov * cov / (var_t * var_y);
            check.exponential_shape = cov < 0.0 && r2 > 0.999;
        }
    }
    check.recommend_exponential = !check.exponential_shape;
    return check;
}

} // namespace phonon
