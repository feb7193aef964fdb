#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace phonon::cli {

enum ExitCode { ok = 0, config_error = 2, engine_error = 3, strict_leakage_tripped = 4 };

/// Runs one subcommand. Human-readable summaries go to `out`; failures are reported on `err`
/// as a single JSON object.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace phonon::cli
