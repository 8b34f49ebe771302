#include "qsdlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "qsdlab/dynamics.hpp"
#include "qsdlab/errors.hpp"

namespace qsdlab {

namespace {

constexpr std::pair<Experiment, const char*> kExperimentNames[] = {
    {Experiment::kernels_check, "kernels_check"}, {Experiment::oracle, "oracle"},
    {Experiment::fv, "fv"},
    {Experiment::sweep, "sweep"},
    {Experiment::coupling, "coupling"},
    {Experiment::exit_law, "exit_law"},
    {Experiment::gibbs, "gibbs"},
};

[[noreturn]] void fail_at(int line, const std::string& key, const std::string& msg) {
  std::ostringstream out;
  if (line > 0) out << "line " << line << ": ";
  out << key << ": " << msg;
  throw ConfigError(out.str());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

// Drops a trailing comment that starts outside a string.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\')
        ++i;
      else if (c == '"')
        in_string = false;
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool parse_number(std::string_view s, double& value, bool& integral) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return false;
  if (!std::isfinite(value)) return false;
  integral = s.find_first_of(".eE") == std::string_view::npos;
  return true;
}

ConfigValue parse_value(std::string_view raw, int line, const std::string& key) {
  ConfigValue v;
  v.line = line;
  if (raw.empty()) fail_at(line, key, "missing value");
  if (raw.front() == '"') {
    v.type = ConfigValue::Type::string;
    std::size_t i = 1;
    for (; i < raw.size(); ++i) {
      const char c = raw[i];
      if (c == '"') break;
      if (c == '\\') {
        if (++i == raw.size()) fail_at(line, key, "unterminated string");
        switch (raw[i]) {
          case 'n': v.text += '\n'; break;
          case 't': v.text += '\t'; break;
          case '"': v.text += '"'; break;
          case '\\': v.text += '\\'; break;
          default: fail_at(line, key, "unsupported escape sequence");
        }
      } else {
        v.text += c;
      }
    }
    if (i >= raw.size()) fail_at(line, key, "unterminated string");
    if (!trim(raw.substr(i + 1)).empty()) fail_at(line, key, "unexpected text after string");
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.type = ConfigValue::Type::boolean;
    v.flag = raw == "true";
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') fail_at(line, key, "arrays must close on the same line");
    v.type = ConfigValue::Type::array;
    std::string_view body = trim(raw.substr(1, raw.size() - 2));
    while (!body.empty()) {
      const std::size_t comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      double x;
      bool integral;
      if (!parse_number(item, x, integral)) fail_at(line, key, "array items must be numbers");
      v.items.push_back(x);
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    return v;
  }
  v.type = ConfigValue::Type::number;
  if (!parse_number(raw, v.number, v.integral))
    fail_at(line, key, "expected a number, string, boolean or array");
  return v;
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [value, name] : kExperimentNames)
    if (value == e) return name;
  return "unknown";
}

std::optional<Experiment> experiment_from_string(std::string_view name) {
  for (const auto& [value, label] : kExperimentNames)
    if (name == label) return value;
  return std::nullopt;
}

std::map<std::string, ConfigValue> parse_key_values(std::string_view text) {
  std::map<std::string, ConfigValue> out;
  std::set<std::string> tables;
  std::string table;
  int line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(line_no, std::string(line), "malformed table header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!is_identifier(name)) fail_at(line_no, name, "invalid table name");
      if (!tables.insert(name).second) fail_at(line_no, name, "duplicate table");
      table = name;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail_at(line_no, std::string(line), "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (!is_identifier(key)) fail_at(line_no, key, "invalid key");
    const std::string path = table.empty() ? key : table + "." + key;
    if (out.count(path)) fail_at(line_no, path, "duplicate key");
    out.emplace(path, parse_value(trim(line.substr(eq + 1)), line_no, path));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

enum class Kind { string, boolean, number, integer, array };

const std::map<std::string, Kind>& schema() {
  static const std::map<std::string, Kind> s = {
      {"experiment", Kind::string},     {"seed", Kind::integer},
      {"output", Kind::string},         {"domain.shape", Kind::string},
      {"domain.a", Kind::number},       {"domain.b", Kind::number},
      {"domain.center", Kind::array},   {"domain.radius", Kind::number},
      {"field.kind", Kind::string},     {"field.strength", Kind::number},
      {"field.clamp_radius", Kind::number},
      {"run.beta", Kind::number},       {"run.gamma", Kind::number},
      {"run.gammas", Kind::array},      {"run.scheme", Kind::string},
      {"run.bridge", Kind::boolean},    {"run.N", Kind::integer},
      {"run.T", Kind::number},          {"run.dt", Kind::number},
      {"run.burn_in", Kind::number},    {"run.snapshot_stride", Kind::integer},
      {"run.oracle_n", Kind::integer},  {"run.replicates", Kind::integer},
      {"run.n_grid", Kind::integer},    {"run.friction_step", Kind::number},
      {"run.friction", Kind::string},   {"run.x0_q", Kind::array},
      {"run.x0_p", Kind::array},        {"run.runs", Kind::integer},
      {"run.horizon", Kind::number},    {"run.start", Kind::string},
      {"run.start_q", Kind::array},     {"run.n_steps", Kind::integer},
      {"run.burn_in_steps", Kind::integer},
      {"run.alpha", Kind::number},      {"run.c_alpha", Kind::number},
      {"run.kernel_t", Kind::number},   {"run.kernel_samples", Kind::integer},
  };
  return s;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::string: return "a string";
    case Kind::boolean: return "a boolean";
    case Kind::number: return "a number";
    case Kind::integer: return "an integer";
    case Kind::array: return "an array of numbers";
  }
  return "a value";
}

class Reader {
 public:
  explicit Reader(std::map<std::string, ConfigValue> kv) : kv_(std::move(kv)) {
    for (const auto& [key, value] : kv_) {
      const auto it = schema().find(key);
      if (it == schema().end()) fail_at(value.line, key, "unknown key");
      check_type(key, value, it->second);
    }
  }

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  int line(const std::string& key) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? 0 : it->second.line;
  }
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    fail_at(line(key), key, msg);
  }

  std::optional<std::string> str(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second.text;
  }
  std::optional<double> number(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second.number;
  }
  std::optional<std::uint64_t> integer(const std::string& key) const {
    const auto n = number(key);
    if (!n) return std::nullopt;
    if (*n < 0.0) fail(key, "must be nonnegative");
    return static_cast<std::uint64_t>(*n);
  }
  std::optional<bool> boolean(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second.flag;
  }
  std::optional<std::vector<double>> array(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return it->second.items;
  }

 private:
  static void check_type(const std::string& key, const ConfigValue& v, Kind k) {
    bool ok = false;
    switch (k) {
      case Kind::string: ok = v.type == ConfigValue::Type::string; break;
      case Kind::boolean: ok = v.type == ConfigValue::Type::boolean; break;
      case Kind::number: ok = v.type == ConfigValue::Type::number; break;
      case Kind::integer:
        ok = v.type == ConfigValue::Type::number && v.number == std::floor(v.number) &&
             std::abs(v.number) < 9.007199254740992e15;
        break;
      case Kind::array: ok = v.type == ConfigValue::Type::array; break;
    }
    if (!ok) fail_at(v.line, key, std::string("expected ") + kind_name(k));
  }

  std::map<std::string, ConfigValue> kv_;
};

std::string format_canonical(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_canonical(xs[i]);
  return s + "]";
}

bool uses_domain(Experiment e) {
  return e == Experiment::oracle || e == Experiment::fv || e == Experiment::sweep ||
         e == Experiment::exit_law;
}

void check_positive(const Reader& r, const std::string& key, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) r.fail(key, "must be positive");
}

}  // namespace

RunConfig parse_config(std::string_view text, std::optional<Experiment> experiment) {
  const Reader r(parse_key_values(text));
  RunConfig c;

  if (const auto name = r.str("experiment")) {
    const auto parsed = experiment_from_string(*name);
    if (!parsed) r.fail("experiment", "unknown experiment \"" + *name + "\"");
    if (experiment && *experiment != *parsed)
      r.fail("experiment", "config names \"" + *name + "\" but the command asked for \"" +
                               to_string(*experiment) + "\"");
    c.experiment = *parsed;
  } else if (experiment) {
    c.experiment = *experiment;
  } else {
    fail_at(0, "experiment", "no experiment given");
  }
  const Experiment e = c.experiment;
  c.seed = r.integer("seed").value_or(1);
  c.output = r.str("output").value_or(".");

  // Domain.
  const std::string shape = r.str("domain.shape").value_or("interval");
  try {
    if (shape == "interval") {
      if (r.has("domain.center") || r.has("domain.radius"))
        r.fail("domain.shape", "interval domains take a and b only");
      c.domain = Domain::interval(r.number("domain.a").value_or(-1.0),
                                  r.number("domain.b").value_or(1.0));
    } else if (shape == "ball") {
      if (r.has("domain.a") || r.has("domain.b"))
        r.fail("domain.shape", "ball domains take center and radius only");
      c.domain = Domain::ball(r.array("domain.center").value_or(std::vector<double>{0.0, 0.0}),
                              r.number("domain.radius").value_or(1.0));
    } else {
      r.fail("domain.shape", "expected \"interval\" or \"ball\"");
    }
  } catch (const InputError& err) {
    r.fail("domain", err.what());
  }

  // Field.
  const std::string kind = r.str("field.kind").value_or("zero");
  const double strength = r.number("field.strength").value_or(1.0);
  if (kind == "zero")
    c.field = FieldSpec::zero();
  else if (kind == "harmonic")
    c.field = FieldSpec::harmonic(strength);
  else if (kind == "double_well")
    c.field = FieldSpec::double_well(strength);
  else
    r.fail("field.kind", "expected \"zero\", \"harmonic\" or \"double_well\"");
  if (c.field.kind != FieldKind::zero) check_positive(r, "field.strength", c.field.strength);
  double default_clamp = std::max(3.0, 2.0 * c.domain.circumscribed_radius());
  if (e == Experiment::gibbs) default_clamp = 10.0;
  if (e == Experiment::coupling) default_clamp = 5.0;
  c.clamp_radius = r.number("field.clamp_radius").value_or(default_clamp);
  check_positive(r, "field.clamp_radius", c.clamp_radius);
  if (uses_domain(e) && !(c.clamp_radius > c.domain.circumscribed_radius()))
    r.fail("field.clamp_radius", "must exceed the domain's circumscribed radius");

  // Physics.
  c.beta = r.number("run.beta").value_or(1.0);
  check_positive(r, "run.beta", c.beta);
  if (r.has("run.gamma") && r.has("run.gammas")) r.fail("run.gammas", "give gamma or gammas, not both");
  const bool list_experiment = e == Experiment::sweep || e == Experiment::coupling;
  if (list_experiment) {
    if (const auto g = r.array("run.gammas"))
      c.gammas = *g;
    else if (const auto g1 = r.number("run.gamma"))
      c.gammas = {*g1};
    else if (e == Experiment::sweep)
      c.gammas = {4.0, 16.0, 64.0};
    else
      c.gammas = {10.0, 40.0, 160.0};
    const std::string gkey = r.has("run.gamma") ? "run.gamma" : "run.gammas";
    if (c.gammas.empty()) r.fail(gkey, "gamma list is empty");
    for (std::size_t i = 0; i < c.gammas.size(); ++i) {
      if (e == Experiment::coupling && !(c.gammas[i] > 1.0)) r.fail(gkey, "gamma must exceed 1");
      check_positive(r, gkey, c.gammas[i]);
      if (i > 0 && !(c.gammas[i] > c.gammas[i - 1])) r.fail(gkey, "gamma list must be increasing");
    }
    c.gamma = c.gammas.front();
  } else {
    if (r.has("run.gammas")) r.fail("run.gammas", "this experiment takes a single gamma");
    c.gamma = r.number("run.gamma").value_or(1.0);
    check_positive(r, "run.gamma", c.gamma);
  }

  // Integrator and ensemble.
  const std::string scheme =
      r.str("run.scheme").value_or(e == Experiment::gibbs ? "langevin" : "overdamped");
  if (scheme == "overdamped")
    c.scheme = FvKind::overdamped;
  else if (scheme == "langevin")
    c.scheme = FvKind::langevin;
  else
    r.fail("run.scheme", "expected \"overdamped\" or \"langevin\"");
  if (e == Experiment::sweep) {
    if (r.has("run.scheme") && c.scheme != FvKind::langevin)
      r.fail("run.scheme", "the sweep runs the Langevin scheme only");
    c.scheme = FvKind::langevin;
  }
  c.bridge = r.boolean("run.bridge").value_or(false);
  if (c.bridge && (c.scheme != FvKind::overdamped || !c.domain.is_interval()))
    r.fail("run.bridge", "bridge correction requires the overdamped scheme on an interval");

  c.T = r.number("run.T").value_or(e == Experiment::coupling ? 1.0 : 10.0);
  check_positive(r, "run.T", c.T);
  c.dt = r.number("run.dt").value_or(e == Experiment::gibbs ? 0.01 : 1e-3);
  check_positive(r, "run.dt", c.dt);
  c.burn_in = r.number("run.burn_in").value_or(0.5 * c.T);
  if (!(c.burn_in >= 0.0 && c.burn_in < c.T)) r.fail("run.burn_in", "must lie in [0, T)");
  c.N = r.integer("run.N").value_or(1000);
  c.snapshot_stride = r.integer("run.snapshot_stride").value_or(100);
  c.oracle_n = r.integer("run.oracle_n").value_or(4000);
  if (e == Experiment::fv || e == Experiment::sweep) {
    if (c.N < 2) r.fail("run.N", "must be at least 2");
    if (c.N > 0xffffffffULL) r.fail("run.N", "is too large");
    if (c.snapshot_stride == 0) r.fail("run.snapshot_stride", "must be positive");
    const auto steps = steps_to_reach(c.T, c.dt);
    const auto burn = c.burn_in > 0.0 ? steps_to_reach(c.burn_in, c.dt) : 0;
    if (burn >= steps || (steps - burn) / c.snapshot_stride == 0)
      r.fail("run.snapshot_stride", "no snapshot falls after burn_in");
  }
  if (c.oracle_n < 16) r.fail("run.oracle_n", "must be at least 16");
  if (e == Experiment::oracle && !c.domain.is_interval())
    r.fail("domain.shape", "the oracle needs an interval domain");

  // Coupling.
  c.replicates = r.integer("run.replicates").value_or(200);
  c.n_grid = r.integer("run.n_grid").value_or(10000);
  c.friction_step = r.number("run.friction_step").value_or(0.01);
  const std::string friction = r.str("run.friction").value_or("euler");
  if (friction == "euler")
    c.friction = FrictionUpdate::euler;
  else if (friction == "exponential")
    c.friction = FrictionUpdate::exponential;
  else
    r.fail("run.friction", "expected \"euler\" or \"exponential\"");
  const std::size_t d = c.domain.dim();
  c.x0_q = r.array("run.x0_q").value_or(std::vector<double>(d, 0.0));
  c.x0_p = r.array("run.x0_p").value_or(std::vector<double>(c.x0_q.size(), 0.0));
  if (c.x0_q.empty() || c.x0_q.size() != c.x0_p.size())
    r.fail("run.x0_p", "x0_q and x0_p need the same positive length");
  if (e == Experiment::coupling) {
    for (double g : c.gammas) {
      CouplingConfig cc;
      cc.gamma = g;
      cc.T = c.T;
      cc.n_grid = c.n_grid;
      cc.x0 = State(c.x0_q, c.x0_p);
      cc.replicates = c.replicates;
      cc.friction_step = c.friction_step;
      try {
        validate(cc);
      } catch (const ConfigError& err) {
        fail_at(0, "run", err.what());
      }
    }
  }

  // Exit law.
  c.runs = r.integer("run.runs").value_or(10000);
  c.horizon = r.number("run.horizon").value_or(10.0);
  c.start = r.str("run.start").value_or("oracle");
  if (e == Experiment::exit_law) {
    if (c.runs == 0) r.fail("run.runs", "must be positive");
    check_positive(r, "run.horizon", c.horizon);
    if (c.start == "oracle") {
      if (!c.domain.is_interval()) r.fail("run.start", "oracle starts need an interval domain");
    } else if (c.start == "point") {
      std::vector<double> centre;
      if (c.domain.is_interval())
        centre = {0.5 * (c.domain.as_interval().a + c.domain.as_interval().b)};
      else
        centre = std::get<Ball>(c.domain.shape()).center;
      c.start_q = r.array("run.start_q").value_or(centre);
      if (c.start_q.size() != d || !c.domain.contains(c.start_q))
        r.fail("run.start_q", "must be a point inside the domain");
    } else {
      r.fail("run.start", "expected \"oracle\" or \"point\"");
    }
  }

  // Gibbs.
  c.n_steps = r.integer("run.n_steps").value_or(1000000);
  c.burn_in_steps = r.integer("run.burn_in_steps").value_or(10000);
  if (e == Experiment::gibbs) {
    if (c.field.kind == FieldKind::zero)
      r.fail("field.kind", "the gibbs experiment needs a confining field");
    if (c.n_steps < 2) r.fail("run.n_steps", "must be at least 2");
  }

  // Kernel check.
  c.alpha = r.number("run.alpha").value_or(1.0);
  c.c_alpha = r.number("run.c_alpha").value_or(1.0);
  c.kernel_t = r.number("run.kernel_t").value_or(1.0);
  c.kernel_samples = r.integer("run.kernel_samples").value_or(100000);
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) r.fail("run.alpha", "must lie in (0, 1]");
  check_positive(r, "run.c_alpha", c.c_alpha);
  check_positive(r, "run.kernel_t", c.kernel_t);
  if (e == Experiment::kernels_check && c.kernel_samples < 2)
    r.fail("run.kernel_samples", "must be at least 2");

  std::map<std::string, std::string> canon;
  canon["experiment"] = to_string(e);
  canon["domain"] = c.domain.describe();
  canon["field.kind"] = to_string(c.field.kind);
  canon["field.strength"] = format_canonical(c.field.strength);
  canon["field.clamp_radius"] = format_canonical(c.clamp_radius);
  canon["run.beta"] = format_canonical(c.beta);
  canon["run.gamma"] = format_canonical(c.gamma);
  canon["run.gammas"] = format_list(c.gammas);
  canon["run.scheme"] = c.scheme == FvKind::langevin ? "langevin" : "overdamped";
  canon["run.bridge"] = c.bridge ? "true" : "false";
  canon["run.N"] = std::to_string(c.N);
  canon["run.T"] = format_canonical(c.T);
  canon["run.dt"] = format_canonical(c.dt);
  canon["run.burn_in"] = format_canonical(c.burn_in);
  canon["run.snapshot_stride"] = std::to_string(c.snapshot_stride);
  canon["run.oracle_n"] = std::to_string(c.oracle_n);
  canon["run.replicates"] = std::to_string(c.replicates);
  canon["run.n_grid"] = std::to_string(c.n_grid);
  canon["run.friction_step"] = format_canonical(c.friction_step);
  canon["run.friction"] = friction;
  canon["run.x0_q"] = format_list(c.x0_q);
  canon["run.x0_p"] = format_list(c.x0_p);
  canon["run.runs"] = std::to_string(c.runs);
  canon["run.horizon"] = format_canonical(c.horizon);
  canon["run.start"] = c.start;
  canon["run.start_q"] = format_list(c.start_q);
  canon["run.n_steps"] = std::to_string(c.n_steps);
  canon["run.burn_in_steps"] = std::to_string(c.burn_in_steps);
  canon["run.alpha"] = format_canonical(c.alpha);
  canon["run.c_alpha"] = format_canonical(c.c_alpha);
  canon["run.kernel_t"] = format_canonical(c.kernel_t);
  canon["run.kernel_samples"] = std::to_string(c.kernel_samples);
  for (const auto& [k, v] : canon) c.canonical += k + "=" + v + "\n";
  return c;
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : cfg.canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qsdlab
