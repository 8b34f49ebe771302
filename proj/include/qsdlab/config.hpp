#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsdlab/coupling.hpp"
#include "qsdlab/model.hpp"
#include "qsdlab/qsd.hpp"

namespace qsdlab {

enum class Experiment { kernels_check, oracle, fv, sweep, coupling, exit_law, gibbs };

std::string to_string(Experiment e);
std::optional<Experiment> experiment_from_string(std::string_view name);

/// One value of the key-value configuration format.
struct ConfigValue {
  enum class Type { string, boolean, number, array };
  Type type = Type::string;
  std::string text;  // string payload
  bool flag = false;
  double number = 0.0;
  bool integral = false;  // number written without fraction or exponent
  std::vector<double> items;
  int line = 0;
};

/// Parses the TOML subset used by run files: `key = value` lines, `[table]`
/// headers, `#` comments, double-quoted strings, true/false, numbers and
/// single-line numeric arrays. Keys are returned as "table.key".
std::map<std::string, ConfigValue> parse_key_values(std::string_view text);

struct RunConfig {
  Experiment experiment = Experiment::kernels_check;
  std::uint64_t seed = 1;
  std::string output = ".";

  double beta = 1.0;
  double gamma = 1.0;
  std::vector<double> gammas;

  Domain domain = Domain::interval(-1.0, 1.0);
  FieldSpec field;
  double clamp_radius = 3.0;

  FvKind scheme = FvKind::overdamped;
  bool bridge = false;
  std::size_t N = 1000;
  double T = 10.0;
  double dt = 1e-3;
  double burn_in = 5.0;
  std::size_t snapshot_stride = 100;
  std::size_t oracle_n = 4000;

  std::size_t replicates = 200;
  std::size_t n_grid = 10000;
  double friction_step = 0.01;
  FrictionUpdate friction = FrictionUpdate::euler;
  std::vector<double> x0_q, x0_p;

  std::size_t runs = 10000;
  double horizon = 10.0;
  std::string start = "oracle";
  std::vector<double> start_q;

  std::uint64_t n_steps = 1000000;
  std::uint64_t burn_in_steps = 10000;

  double alpha = 1.0;
  double c_alpha = 1.0;
  double kernel_t = 1.0;
  std::size_t kernel_samples = 100000;

  /// Resolved settings, one `key=value` per line in key order, excluding
  /// seed and output. Hashed into the CSV comment line.
  std::string canonical;
};

/// Builds a fully validated RunConfig. When the text has no `experiment` key
/// the given one is used; when both are present they must agree. Errors are
/// ConfigError with "line N: key: message".
RunConfig parse_config(std::string_view text, std::optional<Experiment> experiment = std::nullopt);

/// 16 hex digits of the 64-bit FNV-1a hash of the canonical settings.
std::string config_hash(const RunConfig& cfg);

}  // namespace qsdlab
