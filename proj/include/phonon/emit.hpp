#pragma once

#include <string>
#include <vector>

#include "phonon/config.hpp"
#include "phonon/fock.hpp"
#include "phonon/protocol.hpp"
#include "phonon/studies.hpp"

namespace phonon {

inline constexpr int schema_version = 1;

/// CSV schemas (JSON files mirror them and add "schema_version"):
///   trace     tau_s, R, n1, n2, leak1, leak2
///   grid      <axis columns...>, visibility, feasible, error [, extras...]
///   snapshot  row_index, col_index, row_label, col_label, re, im
/// Floating values are written with 17 significant digits in CSV; JSON uses the shortest
/// representation that parses back to the same double.
std::string trace_csv(const ReadoutTrace &trace);
std::string trace_json(const ReadoutTrace &trace);
std::string grid_csv(const SweepGrid &grid);
std::string grid_json(const SweepGrid &grid);
std::string snapshot_csv(const DensityMatrix &rho);
std::string snapshot_json(const DensityMatrix &rho, double tau);

/// Parses a snapshot written by snapshot_csv; labels are checked against `basis`.
DensityMatrix read_snapshot_csv(const std::string &text, const FockBasis &basis);
/// Parses a snapshot written by snapshot_json (the basis is stored in the file).
DensityMatrix read_snapshot_json(const std::string &text);

/// Writes `contents` to dir/name, creating dir if needed. Throws EngineError if unwritable.
std::string write_file(const std::string &dir, const std::string &name, const std::string &contents);

/// run_meta.json: the only output that carries a timestamp.
std::string run_meta_json(const std::string &command, const RunConfig &config);

std::string format_number(double v);
std::string csv_escape(const std::string &field);

} // namespace phonon
