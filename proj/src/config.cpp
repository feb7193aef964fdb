#include "phonon/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "phonon/error.hpp"

namespace phonon {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string &key, const std::string &text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto *end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw ConfigError(key, key + ": expected a finite number, got '" + t + "'");
    }
    return v;
}

int parse_int(const std::string &key, const std::string &text) {
    const std::string t = trim(text);
    int v = 0;
    const auto *end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end) {
        throw ConfigError(key, key + ": expected an integer, got '" + t + "'");
    }
    return v;
}

bool parse_bool(const std::string &key, const std::string &text) {
    const std::string t = trim(text);
    if (t == "true") {
        return true;
    }
    if (t == "false") {
        return false;
    }
    throw ConfigError(key, key + ": expected true or false, got '" + t + "'");
}

std::vector<double> parse_list(const std::string &key, const std::string &text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) {
        throw ConfigError(key, key + ": expected a comma-separated list of numbers");
    }
    return out;
}

std::string format_list(const std::vector<double> &values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += (i ? ", " : "") + format_double(values[i]);
    }
    return out;
}

template <class Enum>
Enum parse_choice(const std::string &key, const std::string &text,
                  const std::vector<std::pair<std::string, Enum>> &choices) {
    const std::string t = trim(text);
    std::string names;
    for (const auto &[name, value] : choices) {
        if (name == t) {
            return value;
        }
        names += (names.empty() ? "" : ", ") + name;
    }
    throw ConfigError(key, key + ": expected one of {" + names + "}, got '" + t + "'");
}

template <class Enum>
std::string choice_name(Enum value, const std::vector<std::pair<std::string, Enum>> &choices) {
    for (const auto &[name, v] : choices) {
        if (v == value) {
            return name;
        }
    }
    return "?";
}

const std::vector<std::pair<std::string, Propagator>> propagators{
    {"rk4", Propagator::rk4}, {"secular_exact", Propagator::secular_exact}};
const std::vector<std::pair<std::string, Frame>> frames{{"rotating", Frame::rotating},
                                                        {"lab", Frame::lab}};
const std::vector<std::pair<std::string, DiffusionModel>> diffusion_models{
    {"quantum", DiffusionModel::quantum}, {"high_temperature", DiffusionModel::high_temperature}};
const std::vector<std::pair<std::string, TruncationCheck>> truncation_checks{
    {"warn", TruncationCheck::warn}, {"fail", TruncationCheck::fail}};
const std::vector<std::pair<std::string, TimingMode>> timing_modes{
    {"single", TimingMode::single}, {"two_detector", TimingMode::two_detector}};
const std::vector<std::pair<std::string, PulseShape>> pulse_shapes{
    {"rectangular", PulseShape::rectangular}, {"exponential", PulseShape::exponential}};
const std::vector<std::pair<std::string, OutputFormat>> formats{{"csv", OutputFormat::csv},
                                                                {"json", OutputFormat::json}};

struct Field {
    std::string key;
    std::function<void(RunConfig &, const std::string &key, const std::string &value)> set;
    // Empty result: key is omitted from emitted configs.
    std::function<std::optional<std::string>(const RunConfig &)> get;
};

Field number(std::string key, double RunConfig::*member) {
    return {key, [member](RunConfig &c, const std::string &k, const std::string &v) {
                c.*member = parse_double(k, v);
            },
            [member](const RunConfig &c) { return std::optional(format_double(c.*member)); }};
}

template <class Get>
Field number_at(std::string key, Get get) {
    return {key, [get](RunConfig &c, const std::string &k, const std::string &v) {
                get(c) = parse_double(k, v);
            },
            [get](const RunConfig &c) {
                return std::optional(format_double(get(c)));
            }};
}

template <class Get>
Field optional_number_at(std::string key, Get get) {
    return {key, [get](RunConfig &c, const std::string &k, const std::string &v) {
                get(c) = parse_double(k, v);
            },
            [get](const RunConfig &c) -> std::optional<std::string> {
                const auto &o = get(c);
                if (!o) {
                    return std::nullopt;
                }
                return format_double(*o);
            }};
}

template <class Get>
Field integer_at(std::string key, Get get) {
    return {key, [get](RunConfig &c, const std::string &k, const std::string &v) {
                get(c) = parse_int(k, v);
            },
            [get](const RunConfig &c) {
                return std::optional(std::to_string(get(c)));
            }};
}

template <class Get>
Field boolean_at(std::string key, Get get) {
    return {key, [get](RunConfig &c, const std::string &k, const std::string &v) {
                get(c) = parse_bool(k, v);
            },
            [get](const RunConfig &c) {
                return std::optional(std::string(get(c) ? "true" : "false"));
            }};
}

template <class Enum, class Get>
Field choice_at(std::string key, Get get, const std::vector<std::pair<std::string, Enum>> &choices) {
    return {key, [get, &choices](RunConfig &c, const std::string &k, const std::string &v) {
                get(c) = parse_choice(k, v, choices);
            },
            [get, &choices](const RunConfig &c) {
                return std::optional(choice_name(get(c), choices));
            }};
}

template <class Get>
Field list_at(std::string key, Get get) {
    return {key, [get](RunConfig &c, const std::string &k, const std::string &v) {
                get(c) = parse_list(k, v);
            },
            [get](const RunConfig &c) -> std::optional<std::string> {
                const auto &values = get(c);
                if (values.empty()) {
                    return std::nullopt;
                }
                return format_list(values);
            }};
}

SweepAxis &axis(RunConfig &c, std::size_t i) {
    if (c.axes.size() <= i) {
        c.axes.resize(i + 1);
    }
    return c.axes[i];
}

Field axis_name(std::string key, std::size_t i) {
    return {key, [i](RunConfig &c, const std::string &k, const std::string &v) {
                const std::string name = trim(v);
                try {
                    parse_sweep_parameter(name);
                } catch (const std::invalid_argument &e) {
                    throw ConfigError(k, k + ": " + e.what());
                }
                axis(c, i).name = name;
            },
            [i](const RunConfig &c) -> std::optional<std::string> {
                if (c.axes.size() <= i) {
                    return std::nullopt;
                }
                return c.axes[i].name;
            }};
}

Field axis_values(std::string key, std::size_t i) {
    return {key, [i](RunConfig &c, const std::string &k, const std::string &v) {
                axis(c, i).values = parse_list(k, v);
            },
            [i](const RunConfig &c) -> std::optional<std::string> {
                if (c.axes.size() <= i || c.axes[i].values.empty()) {
                    return std::nullopt;
                }
                return format_list(c.axes[i].values);
            }};
}

const std::vector<Field> &fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        // system
        f.push_back(number_at("omega1_hz", [](auto &c) -> auto & { return c.protocol.system.omega1_hz; }));
        f.push_back(number_at("omega2_hz", [](auto &c) -> auto & { return c.protocol.system.omega2_hz; }));
        f.push_back(number_at("gamma_hz", [](auto &c) -> auto & { return c.protocol.system.gamma_hz; }));
        f.push_back(number_at("t_env_k", [](auto &c) -> auto & { return c.protocol.system.t_env_k; }));
        f.push_back(number_at("mass2_kg", [](auto &c) -> auto & { return c.protocol.system.mass2_kg; }));
        f.push_back(number_at("kappa_hz", [](auto &c) -> auto & { return c.protocol.system.kappa_hz; }));
        // detection; p and dark also drive the herald model
        f.push_back(number_at("eta", [](auto &c) -> auto & { return c.protocol.detection.eta; }));
        f.push_back(optional_number_at("eta1", [](auto &c) -> auto & { return c.protocol.detection.eta1; }));
        f.push_back(optional_number_at("eta2", [](auto &c) -> auto & { return c.protocol.detection.eta2; }));
        f.push_back({"p",
                     [](RunConfig &c, const std::string &k, const std::string &v) {
                         c.protocol.detection.p = c.protocol.herald.p = parse_double(k, v);
                     },
                     [](const RunConfig &c) { return std::optional(format_double(c.protocol.detection.p)); }});
        f.push_back({"dark",
                     [](RunConfig &c, const std::string &k, const std::string &v) {
                         c.protocol.detection.dark = c.protocol.herald.dark = parse_double(k, v);
                     },
                     [](const RunConfig &c) { return std::optional(format_double(c.protocol.detection.dark)); }});
        f.push_back(integer_at("herald_max_order", [](auto &c) -> auto & { return c.protocol.herald.max_order; }));
        // coupling
        f.push_back(number_at("j_hz", [](auto &c) -> auto & { return c.protocol.coupling.j_hz; }));
        f.push_back(number_at("jc_over_j", [](auto &c) -> auto & { return c.protocol.coupling.jc_over_j; }));
        f.push_back(number_at("jh_over_j", [](auto &c) -> auto & { return c.protocol.coupling.jh_over_j; }));
        f.push_back(number_at("theta_rad", [](auto &c) -> auto & { return c.protocol.theta; }));
        // state and basis
        f.push_back(number_at("n_th1", [](auto &c) -> auto & { return c.protocol.n_th.n1; }));
        f.push_back(number_at("n_th2", [](auto &c) -> auto & { return c.protocol.n_th.n2; }));
        f.push_back({"n1_max",
                     [](RunConfig &c, const std::string &k, const std::string &v) {
                         try {
                             c.protocol.basis = FockBasis(parse_int(k, v), c.protocol.basis.n2_max());
                         } catch (const std::invalid_argument &e) {
                             throw ConfigError(k, k + ": " + e.what());
                         }
                     },
                     [](const RunConfig &c) { return std::optional(std::to_string(c.protocol.basis.n1_max())); }});
        f.push_back({"n2_max",
                     [](RunConfig &c, const std::string &k, const std::string &v) {
                         try {
                             c.protocol.basis = FockBasis(c.protocol.basis.n1_max(), parse_int(k, v));
                         } catch (const std::invalid_argument &e) {
                             throw ConfigError(k, k + ": " + e.what());
                         }
                     },
                     [](const RunConfig &c) { return std::optional(std::to_string(c.protocol.basis.n2_max())); }});
        f.push_back(choice_at("thermal_check", [](auto &c) -> auto & { return c.protocol.thermal_check; }, truncation_checks));
        // delays and integration
        f.push_back(list_at("tau_s", [](auto &c) -> auto & { return c.protocol.tau_grid; }));
        f.push_back(boolean_at("beat_resolution", [](auto &c) -> auto & { return c.protocol.require_beat_resolution; }));
        f.push_back(choice_at("propagator", [](auto &c) -> auto & { return c.protocol.propagator; }, propagators));
        f.push_back(number_at("step_s", [](auto &c) -> auto & { return c.protocol.integrator.step_s; }));
        f.push_back(choice_at("frame", [](auto &c) -> auto & { return c.protocol.integrator.frame; }, frames));
        f.push_back(boolean_at("secular", [](auto &c) -> auto & { return c.protocol.integrator.secular; }));
        f.push_back(number_at("error_tolerance", [](auto &c) -> auto & { return c.protocol.integrator.error_tolerance; }));
        f.push_back(choice_at("diffusion_model", [](auto &c) -> auto & { return c.protocol.integrator.diffusion; }, diffusion_models));
        f.push_back(number_at("leak_warn", [](auto &c) -> auto & { return c.protocol.integrator.leakage.warn; }));
        f.push_back(number_at("leak_fail", [](auto &c) -> auto & { return c.protocol.integrator.leakage.fail; }));
        f.push_back(integer_at("threads", [](auto &c) -> auto & { return c.protocol.threads; }));
        // sweep
        f.push_back(axis_name("axis1", 0));
        f.push_back(axis_values("axis1_values", 0));
        f.push_back(axis_name("axis2", 1));
        f.push_back(axis_values("axis2_values", 1));
        f.push_back(number("feasibility_threshold", &RunConfig::threshold));
        // detuning
        f.push_back(list_at("delta_over_kappa", [](auto &c) -> auto & { return c.delta_over_kappa; }));
        f.push_back(number_at("omega1_over_kappa", [](auto &c) -> auto & { return c.detuning.omega1_over_kappa; }));
        f.push_back(number_at("omega2_over_omega1", [](auto &c) -> auto & { return c.detuning.omega2_over_omega1; }));
        // snapshot
        f.push_back(list_at("snapshot_times_s", [](auto &c) -> auto & { return c.snapshot_times_s; }));
        f.push_back(choice_at("snapshot_frame", [](auto &c) -> auto & { return c.snapshot_frame; }, frames));
        // timing
        f.push_back(number("n_a", &RunConfig::n_a));
        f.push_back(number("n_p", &RunConfig::n_p));
        f.push_back(number("t12_s", &RunConfig::t12_s));
        f.push_back(number("ttot_s", &RunConfig::ttot_s));
        f.push_back(choice_at("timing_mode", [](auto &c) -> auto & { return c.timing_mode; }, timing_modes));
        // analytic
        f.push_back(optional_number_at("tau_d_s", [](auto &c) -> auto & { return c.tau_d_s; }));
        f.push_back(optional_number_at("tau_th_s", [](auto &c) -> auto & { return c.tau_th_s; }));
        f.push_back(boolean_at("analytic_fit", [](auto &c) -> auto & { return c.analytic_fit; }));
        // pulse
        f.push_back(choice_at("pulse_shape", [](auto &c) -> auto & { return c.pulse.shape; }, pulse_shapes));
        f.push_back(number_at("pulse_duration_s", [](auto &c) -> auto & { return c.pulse.duration_s; }));
        f.push_back(number_at("pulse_n_cav", [](auto &c) -> auto & { return c.pulse.n_cav; }));
        f.push_back(number_at("pulse_decay_s", [](auto &c) -> auto & { return c.pulse.decay_s; }));
        f.push_back(integer_at("pulse_samples", [](auto &c) -> auto & { return c.pulse.samples; }));
        f.push_back(number_at("g1_hz", [](auto &c) -> auto & { return c.pulse.g1_hz; }));
        // output
        f.push_back({"out_dir",
                     [](RunConfig &c, const std::string &, const std::string &v) { c.out_dir = trim(v); },
                     [](const RunConfig &c) { return std::optional(c.out_dir); }});
        f.push_back(choice_at("format", [](auto &c) -> auto & { return c.format; }, formats));
        return f;
    }();
    return table;
}

// Keys that only shape other values and are never emitted.
const std::set<std::string> shorthand_keys{"n_th", "tau_start_s", "tau_stop_s", "tau_count"};

} // namespace

void PulseSpec::validate() const {
    if (!(duration_s > 0.0) || !(n_cav >= 0.0) || !(g1_hz >= 0.0)) {
        throw std::invalid_argument("pulse needs duration_s > 0, n_cav >= 0 and g1_hz >= 0");
    }
    if (shape == PulseShape::exponential && !(decay_s > 0.0)) {
        throw std::invalid_argument("exponential pulse needs decay_s > 0");
    }
    if (samples < 2) {
        throw std::invalid_argument("pulse needs at least 2 samples");
    }
}

std::vector<double> pulse_times(const PulseSpec &pulse) {
    pulse.validate();
    std::vector<double> t(static_cast<std::size_t>(pulse.samples));
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = pulse.duration_s * static_cast<double>(i) / static_cast<double>(t.size() - 1);
    }
    return t;
}

std::vector<double> pulse_envelope(const PulseSpec &pulse) {
    auto t = pulse_times(pulse);
    for (auto &v : t) {
        v = pulse.shape == PulseShape::rectangular ? pulse.n_cav
                                                   : pulse.n_cav * std::exp(-v / pulse.decay_s);
    }
    return t;
}

TimingParams RunConfig::timing() const {
    TimingParams t;
    t.n_a = n_a;
    t.n_p = n_p;
    t.t12_s = t12_s;
    t.ttot_s = ttot_s;
    t.eta = protocol.detection.eta;
    t.p = protocol.detection.p;
    t.eta1 = protocol.detection.eta1;
    t.eta2 = protocol.detection.eta2;
    return t;
}

const std::vector<std::string> &config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto &f : fields()) {
            k.push_back(f.key);
        }
        k.insert(k.end(), shorthand_keys.begin(), shorthand_keys.end());
        return k;
    }();
    return keys;
}

RunConfig parse_config(const std::string &text) {
    std::map<std::string, const Field *> by_key;
    for (const auto &f : fields()) {
        by_key[f.key] = &f;
    }
    RunConfig config;
    std::set<std::string> seen;
    std::map<std::string, std::string> shorthand;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    std::vector<std::pair<const Field *, std::string>> deferred;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!seen.insert(key).second) {
            throw ConfigError(key, key + ": given more than once");
        }
        if (shorthand_keys.count(key)) {
            shorthand[key] = value;
            continue;
        }
        const auto it = by_key.find(key);
        if (it == by_key.end()) {
            throw ConfigError(key, "unknown key '" + key + "' (line " + std::to_string(line_no) + ")");
        }
        deferred.emplace_back(it->second, value);
    }
    for (const auto &[field, value] : deferred) {
        field->set(config, field->key, value);
    }

    if (shorthand.count("n_th")) {
        if (seen.count("n_th1") || seen.count("n_th2")) {
            throw ConfigError("n_th", "n_th: cannot be combined with n_th1/n_th2");
        }
        const double v = parse_double("n_th", shorthand["n_th"]);
        config.protocol.n_th = {v, v};
    }
    const int linear = static_cast<int>(shorthand.count("tau_start_s") + shorthand.count("tau_stop_s") +
                                        shorthand.count("tau_count"));
    if (linear > 0) {
        if (linear < 3) {
            throw ConfigError("tau_count", "tau_start_s, tau_stop_s and tau_count must be given together");
        }
        if (seen.count("tau_s")) {
            throw ConfigError("tau_s", "tau_s: cannot be combined with tau_start_s/tau_stop_s/tau_count");
        }
        const double a = parse_double("tau_start_s", shorthand["tau_start_s"]);
        const double b = parse_double("tau_stop_s", shorthand["tau_stop_s"]);
        const int n = parse_int("tau_count", shorthand["tau_count"]);
        if (n < 1 || (n > 1 && !(b > a))) {
            throw ConfigError("tau_count", "tau grid needs tau_count >= 1 and tau_stop_s > tau_start_s");
        }
        config.protocol.tau_grid.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            config.protocol.tau_grid[static_cast<std::size_t>(i)] =
                n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
        }
    }
    for (std::size_t i = 0; i < config.axes.size(); ++i) {
        const auto &ax = config.axes[i];
        const std::string k = "axis" + std::to_string(i + 1);
        if (ax.name.empty() || ax.values.empty()) {
            throw ConfigError(k, k + " and " + k + "_values must be given together");
        }
    }
    if (config.protocol.threads < 1) {
        throw ConfigError("threads", "threads: must be >= 1");
    }
    return config;
}

RunConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("", "cannot read config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string emit_config(const RunConfig &config) {
    std::string out;
    for (const auto &f : fields()) {
        if (auto v = f.get(config)) {
            out += f.key + " = " + *v + "\n";
        }
    }
    return out;
}

} // namespace phonon
