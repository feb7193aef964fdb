#include "phonon/emit.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "phonon/error.hpp"

namespace phonon {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string &field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void require_nonempty(const ReadoutTrace &trace) {
    if (trace.size() == 0) {
        throw std::invalid_argument("trace is empty: nothing to emit");
    }
}

} // namespace

std::string trace_csv(const ReadoutTrace &trace) {
    require_nonempty(trace);
    std::string out = "tau_s,R,n1,n2,leak1,leak2\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += format_number(trace.tau[i]) + ',' + format_number(trace.R[i]) + ',' +
               format_number(trace.n1[i]) + ',' + format_number(trace.n2[i]) + ',' +
               format_number(trace.leak1[i]) + ',' + format_number(trace.leak2[i]) + '\n';
    }
    return out;
}

std::string trace_json(const ReadoutTrace &trace) {
    require_nonempty(trace);
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "trace";
    j["eta"] = trace.eta;
    j["beat_hz"] = trace.beat_hz;
    j["n_env"] = trace.n_env;
    j["warnings"] = trace.warnings;
    json columns;
    const auto array = [](const std::vector<double> &v) {
        json a = json::array();
        for (double x : v) {
            a.push_back(number_or_null(x));
        }
        return a;
    };
    columns["tau_s"] = array(trace.tau);
    columns["R"] = array(trace.R);
    columns["n1"] = array(trace.n1);
    columns["n2"] = array(trace.n2);
    columns["leak1"] = array(trace.leak1);
    columns["leak2"] = array(trace.leak2);
    j["columns"] = columns;
    return j.dump(2) + "\n";
}

namespace {

std::vector<std::string> extra_names(const SweepGrid &grid) {
    std::vector<std::string> names;
    if (!grid.cells.empty()) {
        for (const auto &[k, v] : grid.cells.front().extras) {
            names.push_back(k);
        }
    }
    return names;
}

} // namespace

std::string grid_csv(const SweepGrid &grid) {
    std::string out;
    for (const auto &axis : grid.axes) {
        out += axis.name + ',';
    }
    out += "visibility,feasible,error";
    const auto extras = extra_names(grid);
    for (const auto &e : extras) {
        out += ',' + e;
    }
    out += '\n';
    for (const auto &cell : grid.cells) {
        for (double c : cell.coords) {
            out += format_number(c) + ',';
        }
        std::string error = cell.error;
        if (cell.masked && error.empty()) {
            error = "masked";
        }
        out += format_number(cell.visibility) + ',' + (cell.feasible ? "true" : "false") + ',' +
               csv_escape(error);
        for (const auto &e : extras) {
            out += ',' + format_number(cell.extras.at(e));
        }
        out += '\n';
    }
    return out;
}

std::string grid_json(const SweepGrid &grid) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "grid";
    j["threshold"] = grid.threshold;
    json axes = json::array();
    for (const auto &a : grid.axes) {
        axes.push_back({{"name", a.name}, {"values", a.values}});
    }
    j["axes"] = axes;
    json cells = json::array();
    for (const auto &cell : grid.cells) {
        const auto &in = cell.inputs;
        json inputs = {
            {"n_th1", in.n_th.n1},
            {"n_th2", in.n_th.n2},
            {"p", in.detection.p},
            {"dark", in.detection.dark},
            {"eta", in.detection.eta},
            {"jc_over_j", in.coupling.jc_over_j},
            {"jh_over_j", in.coupling.jh_over_j},
            {"herald_max_order", in.herald.max_order},
            {"omega1_hz", in.system.omega1_hz},
            {"omega2_hz", in.system.omega2_hz},
            {"gamma_hz", in.system.gamma_hz},
            {"t_env_k", in.system.t_env_k},
            {"n1_max", in.basis.n1_max()},
            {"n2_max", in.basis.n2_max()},
            {"tau_s", in.tau_grid},
        };
        json c = {{"coords", cell.coords},
                  {"visibility", number_or_null(cell.visibility)},
                  {"feasible", cell.feasible},
                  {"masked", cell.masked},
                  {"error", cell.error},
                  {"inputs", inputs}};
        if (!cell.extras.empty()) {
            json extras;
            for (const auto &[k, v] : cell.extras) {
                extras[k] = number_or_null(v);
            }
            c["extras"] = extras;
        }
        cells.push_back(c);
    }
    j["cells"] = cells;
    return j.dump(2) + "\n";
}

std::string snapshot_csv(const DensityMatrix &rho) {
    const auto &basis = rho.basis();
    const auto dim = basis.dimension();
    std::string out = "row_index,col_index,row_label,col_label,re,im\n";
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = 0; c < dim; ++c) {
            const Complex v = rho.elements()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            out += std::to_string(r) + ',' + std::to_string(c) + ',' + basis.label(r) + ',' +
                   basis.label(c) + ',' + format_number(v.real()) + ',' + format_number(v.imag()) + '\n';
        }
    }
    return out;
}

std::string snapshot_json(const DensityMatrix &rho, double tau) {
    const auto &basis = rho.basis();
    const auto dim = basis.dimension();
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "snapshot";
    j["tau_s"] = tau;
    j["n1_max"] = basis.n1_max();
    j["n2_max"] = basis.n2_max();
    json labels = json::array();
    for (std::size_t k = 0; k < dim; ++k) {
        labels.push_back(basis.label(k));
    }
    j["labels"] = labels;
    json re = json::array();
    json im = json::array();
    for (std::size_t r = 0; r < dim; ++r) {
        json row_re = json::array();
        json row_im = json::array();
        for (std::size_t c = 0; c < dim; ++c) {
            const Complex v = rho.elements()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            row_re.push_back(v.real());
            row_im.push_back(v.imag());
        }
        re.push_back(row_re);
        im.push_back(row_im);
    }
    j["re"] = re;
    j["im"] = im;
    return j.dump() + "\n";
}

DensityMatrix read_snapshot_csv(const std::string &text, const FockBasis &basis) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "row_index,col_index,row_label,col_label,re,im") {
        throw std::invalid_argument("snapshot CSV: unexpected header");
    }
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    Matrix m = Matrix::Zero(dim, dim);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) {
            f.push_back(item);
        }
        if (f.size() != 6) {
            throw std::invalid_argument("snapshot CSV: expected 6 fields in '" + line + "'");
        }
        const auto r = std::stoul(f[0]);
        const auto c = std::stoul(f[1]);
        if (r >= basis.dimension() || c >= basis.dimension() || f[2] != basis.label(r) ||
            f[3] != basis.label(c)) {
            throw std::invalid_argument("snapshot CSV: index/label mismatch in '" + line + "'");
        }
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            Complex(std::strtod(f[4].c_str(), nullptr), std::strtod(f[5].c_str(), nullptr));
        ++rows;
    }
    if (rows != basis.dimension() * basis.dimension()) {
        throw std::invalid_argument("snapshot CSV: wrong number of rows");
    }
    return DensityMatrix(basis, std::move(m));
}

DensityMatrix read_snapshot_json(const std::string &text) {
    const json j = json::parse(text);
    if (j.at("kind") != "snapshot") {
        throw std::invalid_argument("not a snapshot document");
    }
    const FockBasis basis(j.at("n1_max").get<int>(), j.at("n2_max").get<int>());
    const auto dim = static_cast<Eigen::Index>(basis.dimension());
    Matrix m(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
            m(r, c) = Complex(j.at("re").at(r).at(c).get<double>(), j.at("im").at(r).at(c).get<double>());
        }
    }
    return DensityMatrix(basis, std::move(m));
}

std::string write_file(const std::string &dir, const std::string &name, const std::string &contents) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw EngineError("cannot write '" + path.string() + "'");
    }
    out << contents;
    out.close();
    if (!out) {
        throw EngineError("failed writing '" + path.string() + "'");
    }
    return path.string();
}

std::string run_meta_json(const std::string &command, const RunConfig &config) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
    json j;
    j["schema_version"] = schema_version;
    j["command"] = command;
    j["timestamp_utc"] = stamp;
    j["config"] = emit_config(config);
    return j.dump(2) + "\n";
}

} // namespace phonon
