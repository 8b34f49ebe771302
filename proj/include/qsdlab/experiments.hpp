#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

#include "qsdlab/config.hpp"

namespace qsdlab {

/// Shortest round-trip decimal form; "nan" and "inf"/"-inf" for non-finite.
std::string format_double(double x);

struct ExperimentOutput {
  std::string csv;      // full file contents, comment line first
  std::string summary;  // one line, no trailing newline
  std::size_t rows = 0;
};

/// Runs the configured experiment and renders its CSV. Throws the library
/// exceptions on failure.
ExperimentOutput run_experiment(const RunConfig& cfg, std::size_t threads);

struct RunOptions {
  std::size_t threads = 1;
  /// Directory for <experiment>.csv; defaults to the config's output entry.
  std::optional<std::string> out_dir;
};

/// Runs, writes the CSV and prints the summary to `out`. Returns 0 on
/// success, 2 on configuration or input errors, 3 on numerical failures
/// (including degenerate ensembles), 1 on I/O failures; diagnostics go to `err`.
int run(const RunConfig& cfg, const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace qsdlab
