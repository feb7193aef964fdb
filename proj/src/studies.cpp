#include "phonon/studies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "phonon/parallel.hpp"

namespace phonon {

std::string to_string(SweepParameter parameter) {
    switch (parameter) {
    case SweepParameter::n_th:
        return "n_th";
    case SweepParameter::p:
        return "p";
    case SweepParameter::dark:
        return "dark";
    case SweepParameter::jc_over_j:
        return "jc_over_j";
    case SweepParameter::jh_over_j:
        return "jh_over_j";
    }
    return "?";
}

SweepParameter parse_sweep_parameter(const std::string &name) {
    for (auto p : {SweepParameter::n_th, SweepParameter::p, SweepParameter::dark,
                   SweepParameter::jc_over_j, SweepParameter::jh_over_j}) {
        if (to_string(p) == name) {
            return p;
        }
    }
    throw std::invalid_argument("unknown sweep parameter '" + name +
                                "' (expected n_th, p, dark, jc_over_j or jh_over_j)");
}

void apply_parameter(ProtocolConfig &config, SweepParameter parameter, double value) {
    switch (parameter) {
    case SweepParameter::n_th:
        config.n_th = {value, value};
        break;
    case SweepParameter::p:
        config.detection.p = value;
        config.herald.p = value;
        break;
    case SweepParameter::dark:
        config.detection.dark = value;
        config.herald.dark = value;
        break;
    case SweepParameter::jc_over_j:
        config.coupling.jc_over_j = value;
        break;
    case SweepParameter::jh_over_j:
        config.coupling.jh_over_j = value;
        break;
    }
}

const SweepCell &SweepGrid::at(std::size_t i, std::size_t j) const {
    const std::size_t inner = axes.size() > 1 ? axes[1].values.size() : 1;
    return cells.at(i * inner + j);
}

SweepCell run_cell(const ProtocolConfig &config, double threshold) {
    SweepCell cell;
    cell.inputs = config;
    cell.visibility = std::numeric_limits<double>::quiet_NaN();
    try {
        const auto trace = run_protocol(config);
        cell.visibility = extract_visibility(trace);
        cell.feasible = cell.visibility >= threshold;
    } catch (const std::exception &e) {
        cell.error = e.what();
        cell.feasible = false;
    }
    return cell;
}

SweepGrid sweep_visibility(const ProtocolConfig &base, const std::vector<SweepAxis> &axes,
                           const SweepOptions &options) {
    if (axes.empty() || axes.size() > 2) {
        throw std::invalid_argument("sweep needs one or two axes");
    }
    std::vector<SweepParameter> params;
    for (const auto &axis : axes) {
        if (axis.values.empty()) {
            throw std::invalid_argument("sweep axis '" + axis.name + "' has no values");
        }
        params.push_back(parse_sweep_parameter(axis.name));
    }
    if (axes.size() == 2 && params[0] == params[1]) {
        throw std::invalid_argument("sweep axes must be distinct parameters");
    }
    const std::size_t inner = axes.size() > 1 ? axes[1].values.size() : 1;
    const std::size_t total = axes[0].values.size() * inner;

    SweepGrid grid;
    grid.axes = axes;
    grid.threshold = options.threshold;
    grid.cells.resize(total);
    parallel_for(total, options.threads, [&](std::size_t k) {
        ProtocolConfig config = base;
        config.threads = 1;
        std::vector<double> coords{axes[0].values[k / inner]};
        apply_parameter(config, params[0], coords[0]);
        if (axes.size() > 1) {
            coords.push_back(axes[1].values[k % inner]);
            apply_parameter(config, params[1], coords[1]);
        }
        SweepCell cell = run_cell(config, options.threshold);
        cell.coords = std::move(coords);
        grid.cells[k] = std::move(cell);
    });
    return grid;
}

void DetuningParams::validate() const {
    if (!(omega1_over_kappa > 0.0) || !(omega2_over_omega1 > 0.0)) {
        throw std::invalid_argument("detuning ratios must be positive");
    }
    if (omega2_over_omega1 == 1.0) {
        throw std::invalid_argument("omega2_over_omega1 must differ from 1");
    }
}

DetuningRates detuning_rates(double delta, const DetuningParams &params) {
    params.validate();
    // Units of kappa throughout.
    const double w1 = params.omega1_over_kappa;
    const double w2 = w1 * params.omega2_over_omega1;
    const double half = 0.5;
    const auto lorentz = [&](double x) { return half * half / (half * half + x * x); };
    DetuningRates out;
    out.j = std::abs(delta) / (delta * delta + half * half);
    double jc = 0.0;
    double jh = 0.0;
    for (double beam : {w1 + delta, w2 + delta}) {
        for (double mode : {w1, w2}) {
            jc += 4.0 * lorentz(beam - mode);
            jh += 4.0 * lorentz(beam + mode);
        }
    }
    out.jc_over_j = jc / out.j;
    out.jh_over_j = jh / out.j;
    out.finite = std::isfinite(out.jc_over_j) && std::isfinite(out.jh_over_j) && out.j > 0.0;
    return out;
}

SweepGrid detuning_sweep(const ProtocolConfig &base, const std::vector<double> &delta_over_kappa,
                         const DetuningParams &params, const SweepOptions &options) {
    params.validate();
    if (delta_over_kappa.empty()) {
        throw std::invalid_argument("detuning grid is empty");
    }
    const std::size_t count = delta_over_kappa.size();
    std::vector<DetuningRates> rates(count);
    double j_max = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        rates[i] = detuning_rates(delta_over_kappa[i], params);
        if (std::isfinite(rates[i].j)) {
            j_max = std::max(j_max, rates[i].j);
        }
    }

    SweepGrid grid;
    grid.axes = {{"delta_over_kappa", delta_over_kappa}};
    grid.threshold = options.threshold;
    grid.cells.resize(count);
    parallel_for(count, options.threads, [&](std::size_t i) {
        const auto &r = rates[i];
        ProtocolConfig config = base;
        config.threads = 1;
        SweepCell cell;
        const bool masked = !r.finite || r.jc_over_j + r.jh_over_j >= 1.0;
        if (masked) {
            cell.inputs = config;
            cell.visibility = std::numeric_limits<double>::quiet_NaN();
            cell.masked = true;
        } else {
            config.coupling.jc_over_j = r.jc_over_j;
            config.coupling.jh_over_j = r.jh_over_j;
            cell = run_cell(config, options.threshold);
        }
        cell.coords = {delta_over_kappa[i]};
        cell.extras["j_normalized"] = j_max > 0.0 ? r.j / j_max : 0.0;
        cell.extras["jc_over_j"] = r.jc_over_j;
        cell.extras["jh_over_j"] = r.jh_over_j;
        grid.cells[i] = std::move(cell);
    });
    return grid;
}

std::vector<Snapshot> snapshot_sequence(const ProtocolConfig &config,
                                        const std::vector<double> &times, Frame frame) {
    if (times.empty()) {
        throw std::invalid_argument("snapshot times are empty");
    }
    for (double t : times) {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw std::invalid_argument("snapshot times must be finite and >= 0");
        }
    }
    ProtocolConfig base = config;
    base.tau_grid = {0.0};  // the protocol validator needs a grid; times are handled here
    const DensityMatrix split = prepare_split_state(base);

    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    std::vector<double> sorted;
    for (auto i : order) {
        if (sorted.empty() || times[i] > sorted.back()) {
            sorted.push_back(times[i]);
        }
    }

    std::vector<std::optional<DensityMatrix>> lab(sorted.size());
    if (config.propagator == Propagator::rk4) {
        auto result = evolve_samples(split, sorted, config.system, config.integrator);
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            lab[i].emplace(std::move(result.samples[i].rho));
        }
    } else {
        const auto generator =
            secular_rates(config.basis, config.system, config.integrator.diffusion);
        parallel_for(sorted.size(), config.threads, [&](std::size_t i) {
            lab[i].emplace(evolve_secular(generator, split, sorted[i], config.system));
        });
    }

    std::vector<Snapshot> out;
    out.reserve(times.size());
    for (double t : times) {
        const auto k = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
        const DensityMatrix &rho = *lab[k];
        out.push_back({t, frame == Frame::lab ? rho : to_rotating_frame(rho, t, config.system)});
    }
    return out;
}

double off_diagonal_magnitude(const DensityMatrix &rho) {
    const auto &m = rho.elements();
    return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
}

void TimingParams::validate() const {
    for (auto [v, name] : {std::pair{n_a, "n_a"}, std::pair{n_p, "n_p"}, std::pair{t12_s, "t12_s"},
                           std::pair{ttot_s, "ttot_s"}}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string(name) + " must be positive");
        }
    }
    const auto probability = [](double v, const char *name) {
        if (!(v > 0.0 && v <= 1.0)) {
            throw std::invalid_argument(std::string(name) + " must lie in (0, 1]");
        }
    };
    probability(eta, "eta");
    probability(p, "p");
    if (eta1) {
        probability(*eta1, "eta1");
    }
    if (eta2) {
        probability(*eta2, "eta2");
    }
}

TimingEstimate timing_estimate(const TimingParams &t, TimingMode mode) {
    t.validate();
    double herald_eta = t.eta;
    double read_eta = t.eta;
    if (mode == TimingMode::two_detector) {
        if (!t.eta1 || !t.eta2) {
            throw std::invalid_argument("two-detector timing needs eta1 and eta2");
        }
        herald_eta = *t.eta1;
        read_eta = *t.eta2;
    }
    const double runs = t.n_a * t.n_p;
    TimingEstimate out;
    out.postselection_s = runs * t.t12_s * (1.0 - herald_eta * t.p) / (herald_eta * read_eta * t.p);
    out.exact_s = out.postselection_s + runs * t.ttot_s * herald_eta * t.p / read_eta;
    out.approx_s = runs * t.t12_s / (herald_eta * read_eta * t.p);
    return out;
}

std::string to_string(Band band) {
    switch (band) {
    case Band::pass:
        return "pass";
    case Band::warn:
        return "warn";
    case Band::fail:
        return "fail";
    }
    return "?";
}

CountingReport counting_constraint(double eta, double n_env) {
    if (!(eta >= 0.0) || !(n_env >= 0.0)) {
        throw std::invalid_argument("eta and n_env must be >= 0");
    }
    CountingReport r;
    r.product = eta * n_env;
    r.band = r.product < 0.1 ? Band::pass : (r.product < 1.0 ? Band::warn : Band::fail);
    return r;
}

} // namespace phonon
