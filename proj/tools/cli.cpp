#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "phonon/config.hpp"
#include "phonon/emit.hpp"
#include "phonon/error.hpp"
#include "phonon/protocol.hpp"
#include "phonon/studies.hpp"

namespace phonon::cli {

namespace {

using nlohmann::json;

struct Options {
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::string format;
    int threads = 0;
    bool strict_leakage = false;
};

// Thrown after outputs are written when --strict-leakage finds infeasible cells.
struct StrictTripped {
    std::string message;
};

class Output {
public:
    Output(const RunConfig &config, std::string command)
        : config_(config), command_(std::move(command)) {}

    bool json_format() const { return config_.format == OutputFormat::json; }
    std::string ext() const { return json_format() ? ".json" : ".csv"; }

    void file(const std::string &name, const std::string &contents) {
        written_.push_back(write_file(config_.out_dir, name, contents));
    }

    void finish(std::ostream &out) {
        written_.push_back(write_file(config_.out_dir, "run_meta.json", run_meta_json(command_, config_)));
        for (const auto &w : written_) {
            out << "wrote " << w << "\n";
        }
    }

private:
    const RunConfig &config_;
    std::string command_;
    std::vector<std::string> written_;
};

std::string report_csv(const json &report) {
    std::string out = "quantity,value\n";
    for (const auto &[k, v] : report.items()) {
        if (k == "schema_version" || k == "kind") {
            continue;
        }
        std::string value;
        if (v.is_number_float()) {
            value = format_number(v.get<double>());
        } else if (v.is_string()) {
            value = v.get<std::string>();
        } else {
            value = v.dump();
        }
        out += csv_escape(k) + ',' + csv_escape(value) + '\n';
    }
    return out;
}

std::string report_text(const json &report, bool json_format) {
    return json_format ? report.dump(2) + "\n" : report_csv(report);
}

void print_warnings(const std::vector<std::string> &warnings, std::ostream &err) {
    for (const auto &w : warnings) {
        err << json{{"warning", w}}.dump() << "\n";
    }
}

void run_simulate(const RunConfig &config, Output &output, std::ostream &out, std::ostream &err) {
    const ReadoutTrace trace = run_protocol(config.protocol);
    print_warnings(trace.warnings, err);
    output.file("trace" + output.ext(), output.json_format() ? trace_json(trace) : trace_csv(trace));
    try {
        out << "visibility " << format_number(extract_visibility(trace)) << "\n";
    } catch (const std::invalid_argument &e) {
        out << "visibility unavailable: " << e.what() << "\n";
    }
}

ReadoutTrace analytic_trace(const AnalyticModel &model, const std::vector<double> &taus) {
    ReadoutTrace trace;
    trace.eta = model.eta;
    trace.beat_hz = model.delta_omega_hz;
    trace.n_env = model.n_env;
    trace.tau = taus;
    for (double t : taus) {
        const double r = analytic_readout(model, t);
        trace.R.push_back(r);
        trace.n1.push_back(model.eta > 0.0 ? r / model.eta : std::nan(""));
        trace.n2.push_back(std::nan(""));
        trace.leak1.push_back(0.0);
        trace.leak2.push_back(0.0);
    }
    return trace;
}

void run_analytic(const RunConfig &config, Output &output, std::ostream &out, std::ostream &err) {
    const auto &pc = config.protocol;
    if (pc.tau_grid.empty()) {
        throw ConfigError("tau_s", "analytic needs a tau grid (tau_s or tau_start_s/tau_stop_s/tau_count)");
    }
    AnalyticModel model;
    model.n_env = pc.system.n_env();
    model.delta_omega_hz = pc.system.delta_omega_hz();
    model.eta = pc.detection.eta;
    json report = {{"schema_version", schema_version}, {"kind", "fit"}};
    if (config.analytic_fit) {
        const ReadoutTrace numeric = run_protocol(pc);
        print_warnings(numeric.warnings, err);
        const DecayFit fit = fit_decay(numeric);
        model.tau_d = fit.tau_d;
        model.tau_th = fit.tau_th;
        report["tau_d_s"] = fit.tau_d;
        report["tau_th_s"] = fit.tau_th;
        report["tau_d_lower_bound"] = fit.tau_d_lower_bound;
        report["tau_th_lower_bound"] = fit.tau_th_lower_bound;
        report["residual_norm"] = fit.residual_norm;
        report["rms_over_eta"] = fit.rms_over_eta;
        report["converged"] = fit.converged;
        report["message"] = fit.message;
        output.file("trace_numeric" + output.ext(),
                    output.json_format() ? trace_json(numeric) : trace_csv(numeric));
        out << "fit " << fit.message << ": tau_d " << format_number(fit.tau_d) << " s, tau_th "
            << format_number(fit.tau_th) << " s, rms/eta " << format_number(fit.rms_over_eta) << "\n";
    } else {
        if (!config.tau_d_s || !config.tau_th_s) {
            throw ConfigError(config.tau_d_s ? "tau_th_s" : "tau_d_s",
                              "analytic needs tau_d_s and tau_th_s, or analytic_fit = true");
        }
        model.tau_d = *config.tau_d_s;
        model.tau_th = *config.tau_th_s;
        try {
            model.validate();
        } catch (const std::invalid_argument &e) {
            throw ConfigError("tau_d_s", e.what());
        }
        report["tau_d_s"] = model.tau_d;
        report["tau_th_s"] = model.tau_th;
    }
    report["n_env"] = model.n_env;
    report["delta_omega_hz"] = model.delta_omega_hz;
    report["eta"] = model.eta;
    const ReadoutTrace trace = analytic_trace(model, pc.tau_grid);
    output.file("trace_analytic" + output.ext(),
                output.json_format() ? trace_json(trace) : trace_csv(trace));
    output.file("fit" + output.ext(), report_text(report, output.json_format()));
}

void check_strict(const SweepGrid &grid, bool strict) {
    if (!strict) {
        return;
    }
    std::size_t tripped = 0;
    for (const auto &cell : grid.cells) {
        if (!cell.feasible || cell.masked || !cell.error.empty()) {
            ++tripped;
        }
    }
    if (tripped > 0) {
        throw StrictTripped{std::to_string(tripped) + " of " + std::to_string(grid.size()) +
                            " cells are infeasible, masked or failed"};
    }
}

void summarize_grid(const SweepGrid &grid, std::ostream &out) {
    std::size_t feasible = 0;
    std::size_t failed = 0;
    for (const auto &c : grid.cells) {
        feasible += c.feasible ? 1 : 0;
        failed += c.error.empty() ? 0 : 1;
    }
    out << grid.size() << " cells, " << feasible << " feasible, " << failed << " failed\n";
}

void run_sweep(const RunConfig &config, Output &output, std::ostream &out, bool strict) {
    if (config.axes.empty()) {
        throw ConfigError("axis1", "sweep needs axis1 and axis1_values");
    }
    config.protocol.validate();
    const SweepGrid grid = sweep_visibility(config.protocol, config.axes,
                                            {config.protocol.threads, config.threshold});
    output.file("grid" + output.ext(), output.json_format() ? grid_json(grid) : grid_csv(grid));
    summarize_grid(grid, out);
    check_strict(grid, strict);
}

void run_detuning(const RunConfig &config, Output &output, std::ostream &out, bool strict) {
    if (config.delta_over_kappa.empty()) {
        throw ConfigError("delta_over_kappa", "detuning needs delta_over_kappa");
    }
    config.protocol.validate();
    config.detuning.validate();
    const SweepGrid grid = detuning_sweep(config.protocol, config.delta_over_kappa, config.detuning,
                                          {config.protocol.threads, config.threshold});
    output.file("grid" + output.ext(), output.json_format() ? grid_json(grid) : grid_csv(grid));
    summarize_grid(grid, out);
    check_strict(grid, strict);
}

void run_snapshot(const RunConfig &config, Output &output, std::ostream &out) {
    if (config.snapshot_times_s.empty()) {
        throw ConfigError("snapshot_times_s", "snapshot needs snapshot_times_s");
    }
    const auto snaps = snapshot_sequence(config.protocol, config.snapshot_times_s, config.snapshot_frame);
    std::string index = "index,tau_s,file,off_diagonal\n";
    json index_json = {{"schema_version", schema_version}, {"kind", "snapshot_index"}};
    json entries = json::array();
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "snapshot_%03zu%s", i, output.ext().c_str());
        output.file(name, output.json_format() ? snapshot_json(snaps[i].rho, snaps[i].tau)
                                               : snapshot_csv(snaps[i].rho));
        const double off = off_diagonal_magnitude(snaps[i].rho);
        index += std::to_string(i) + ',' + format_number(snaps[i].tau) + ',' + name + ',' +
                 format_number(off) + '\n';
        entries.push_back({{"index", i}, {"tau_s", snaps[i].tau}, {"file", name}, {"off_diagonal", off}});
    }
    index_json["snapshots"] = entries;
    output.file("snapshots" + output.ext(), output.json_format() ? index_json.dump(2) + "\n" : index);
    out << snaps.size() << " snapshots\n";
}

void run_timing(const RunConfig &config, Output &output, std::ostream &out) {
    const TimingParams params = config.timing();
    try {
        params.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError("", e.what());
    }
    const TimingEstimate t = timing_estimate(params, config.timing_mode);
    json report = {{"schema_version", schema_version},
                   {"kind", "timing"},
                   {"mode", config.timing_mode == TimingMode::single ? "single" : "two_detector"},
                   {"exact_s", t.exact_s},
                   {"approx_s", t.approx_s},
                   {"postselection_s", t.postselection_s},
                   {"exact_hours", t.exact_s / 3600.0},
                   {"exact_days", t.exact_s / 86400.0}};
    if (config.protocol.system.omega2_hz > 0.0) {
        const double n_env = config.protocol.system.n_env();
        const auto c = counting_constraint(params.eta, n_env);
        report["n_env"] = n_env;
        report["eta_n_env"] = c.product;
        report["counting_band"] = to_string(c.band);
    }
    output.file("timing" + output.ext(), report_text(report, output.json_format()));
    out << "T = " << format_number(t.exact_s) << " s (" << format_number(t.exact_s / 3600.0)
        << " hours); approx " << format_number(t.approx_s) << " s\n";
}

void run_validate_pulse(const RunConfig &config, Output &output, std::ostream &out) {
    try {
        config.pulse.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError("pulse_duration_s", e.what());
    }
    const auto times = pulse_times(config.pulse);
    const auto env = pulse_envelope(config.pulse);
    const auto check = validate_pulse_area(times, env, config.pulse.g1_hz);
    json report = {{"schema_version", schema_version},
                   {"kind", "pulse"},
                   {"area", check.area},
                   {"target", check.target},
                   {"relative_error", check.relative_error},
                   {"pass", check.pass},
                   {"exponential_shape", check.exponential_shape},
                   {"recommend_exponential", check.recommend_exponential}};
    output.file("pulse" + output.ext(), report_text(report, output.json_format()));
    out << "pulse area " << format_number(check.area) << " vs " << format_number(check.target) << ": "
        << (check.pass ? "pass" : "fail") << "\n";
}

int fail(std::ostream &err, int code, const std::string &kind, const std::string &message,
         const std::string &key = "") {
    json e = {{"kind", kind}, {"message", message}, {"exit_code", code}};
    if (!key.empty()) {
        e["key"] = key;
    }
    err << json{{"error", e}}.dump() << "\n";
    return code;
}

int dispatch(const Options &opt, std::ostream &out, std::ostream &err) {
    RunConfig config = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
    if (!opt.out_dir.empty()) {
        config.out_dir = opt.out_dir;
    }
    if (!opt.format.empty()) {
        config.format = opt.format == "json" ? OutputFormat::json : OutputFormat::csv;
    }
    if (opt.threads > 0) {
        config.protocol.threads = opt.threads;
    }
    if (opt.strict_leakage) {
        config.protocol.thermal_check = TruncationCheck::fail;
        config.protocol.integrator.leakage.fail =
            std::min(config.protocol.integrator.leakage.fail, config.protocol.integrator.leakage.warn);
    }

    Output output(config, opt.command);
    int code = ok;
    try {
        if (opt.command == "simulate") {
            run_simulate(config, output, out, err);
        } else if (opt.command == "analytic") {
            run_analytic(config, output, out, err);
        } else if (opt.command == "sweep") {
            run_sweep(config, output, out, opt.strict_leakage);
        } else if (opt.command == "detuning") {
            run_detuning(config, output, out, opt.strict_leakage);
        } else if (opt.command == "snapshot") {
            run_snapshot(config, output, out);
        } else if (opt.command == "timing") {
            run_timing(config, output, out);
        } else if (opt.command == "validate-pulse") {
            run_validate_pulse(config, output, out);
        }
    } catch (const StrictTripped &s) {
        code = fail(err, strict_leakage_tripped, "strict_leakage", s.message);
    }
    output.finish(out);
    return code;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Two-resonator phonon interferometry simulator"};
    app.require_subcommand(1, 1);
    Options opt;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "Run the protocol over the tau grid and write the readout trace"},
        {"analytic", "Evaluate (or fit) the analytic readout model"},
        {"sweep", "Visibility over one or two imperfection axes"},
        {"detuning", "Visibility and rates against beam detuning"},
        {"snapshot", "Density matrices after the first splitter at several delays"},
        {"timing", "Experiment wall-clock estimate"},
        {"validate-pulse", "Check a readout pulse area against pi/2"},
    };
    for (const auto &[name, help] : commands) {
        auto *sub = app.add_subcommand(name, help);
        sub->add_option("--config", opt.config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--strict-leakage", opt.strict_leakage,
                      "treat any truncation warning as failure; exit 4 on infeasible sweep cells");
        sub->callback([&opt, name = name] { opt.command = name; });
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError &e) {
        err << app.help();
        return fail(err, config_error, "usage", e.what());
    }

    try {
        return dispatch(opt, out, err);
    } catch (const ConfigError &e) {
        err << "usage: phonon-interf " << opt.command << " --config FILE [--out DIR] [--format csv|json]"
            << " [--threads N] [--strict-leakage]\n";
        return fail(err, config_error, "config", e.what(), e.key());
    } catch (const TruncationError &e) {
        return fail(err, opt.strict_leakage ? strict_leakage_tripped : engine_error, "truncation", e.what());
    } catch (const std::invalid_argument &e) {
        return fail(err, config_error, "config", e.what());
    } catch (const std::exception &e) {
        return fail(err, engine_error, "engine", e.what());
    }
}

} // namespace phonon::cli
