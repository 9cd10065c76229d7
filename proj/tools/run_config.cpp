#include "run_config.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace clabfm::cli {

using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string &text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

[[noreturn]] void bad_field(const std::string &key, const std::string &what) {
  throw ConfigError("config field `" + key + "`: " + what);
}

double get_number(const json &j, const std::string &key) {
  if (!j.is_number()) bad_field(key, "expected a number");
  return j.get<double>();
}

int get_int(const json &j, const std::string &key) {
  if (!j.is_number_integer()) bad_field(key, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json &j, const std::string &key) {
  if (!j.is_string()) bad_field(key, "expected a string");
  return j.get<std::string>();
}

/// A string ("a,d") or an array of strings.
std::vector<std::string> get_list(const json &j, const std::string &key) {
  if (j.is_string()) return split_list(j.get<std::string>());
  if (!j.is_array()) bad_field(key, "expected a string or an array of strings");
  std::vector<std::string> out;
  for (const auto &e : j) out.push_back(get_string(e, key));
  return out;
}

std::vector<char> parse_schemes(const std::vector<std::string> &labels, const std::string &key) {
  if (labels.empty()) bad_field(key, "no scheme given");
  std::vector<char> out;
  for (const auto &l : labels) {
    if (l.size() != 1) bad_field(key, "scheme labels are single letters a..h, got `" + l + "`");
    try {
      SchemeSpec::from_label(l[0]);
    } catch (const ConfigError &e) {
      bad_field(key, e.what());
    }
    out.push_back(l[0]);
  }
  return out;
}

std::vector<OperatorKind> parse_kinds(const std::vector<std::string> &names,
                                      const std::string &key) {
  if (names.empty()) bad_field(key, "no operator kind given");
  std::vector<OperatorKind> out;
  for (const auto &n : names) {
    try {
      out.push_back(parse_operator_kind(n));
    } catch (const ConfigError &e) {
      bad_field(key, e.what());
    }
  }
  return out;
}

json schemes_json(const std::vector<char> &schemes) {
  json a = json::array();
  for (char c : schemes) a.push_back(std::string(1, c));
  return a;
}

json kinds_json(const std::vector<OperatorKind> &kinds) {
  json a = json::array();
  for (auto k : kinds) a.push_back(to_string(k));
  return a;
}

} // namespace

std::string to_string(Command c) {
  switch (c) {
  case Command::nodes: return "nodes";
  case Command::rp: return "rp";
  case Command::converge: return "converge";
  case Command::stability: return "stability";
  case Command::burgers: return "burgers";
  case Command::poisson: return "poisson";
  }
  return "?";
}

Command parse_command(std::string_view text) {
  for (auto c : {Command::nodes, Command::rp, Command::converge, Command::stability,
                 Command::burgers, Command::poisson})
    if (to_string(c) == text) return c;
  throw ConfigError("unknown command `" + std::string(text) +
                    "` (nodes|rp|converge|stability|burgers|poisson)");
}

const std::vector<std::string> &config_keys() {
  static const std::vector<std::string> keys{
      "command", "scheme",      "kind",   "domain",          "s",              "resolutions",
      "seed",    "samples",     "lines",  "out",             "Re",             "t_end",
      "output_interval",        "paper_exact_dt",            "solver_tol",     "max_iter",
      "restart"};
  return keys;
}

json load_config_file(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error &e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

RunConfig parse_config(const json *file, const FlagValues &flags) {
  RunConfig c;
  json doc = json::object();
  if (file) {
    if (!file->is_object()) throw ConfigError("config file must hold a JSON object");
    doc = *file;
  }
  const auto &keys = config_keys();
  for (const auto &[key, _] : doc.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("unknown config key `" + key + "`");

  // flags take precedence; a flag that disagrees with the file is recorded
  auto merge = [&](const std::string &key, const json &flag_value) {
    if (doc.contains(key) && doc[key] != flag_value)
      c.overrides.push_back({key, doc[key], flag_value});
    doc[key] = flag_value;
  };
  if (flags.command) merge("command", *flags.command);
  if (flags.scheme) merge("scheme", *flags.scheme);
  if (flags.kind) merge("kind", *flags.kind);
  if (flags.s) merge("s", *flags.s);
  if (flags.seed) merge("seed", *flags.seed);
  if (flags.out) merge("out", *flags.out);
  if (flags.paper_exact_dt) merge("paper_exact_dt", true);

  if (!doc.contains("command")) throw ConfigError("config field `command`: missing");
  try {
    c.command = parse_command(get_string(doc["command"], "command"));
  } catch (const ConfigError &e) {
    bad_field("command", e.what());
  }

  // command-dependent defaults
  switch (c.command) {
  case Command::stability: c.s = 1.0 / 20.0; break;
  case Command::converge: c.resolutions = {1.0 / 20, 1.0 / 40, 1.0 / 80, 1.0 / 160}; break;
  case Command::poisson:
    c.domain = "punctured";
    c.resolutions = {1.0 / 20, 1.0 / 40, 1.0 / 80};
    c.schemes = {'d'};
    c.kinds = {OperatorKind::laplacian};
    break;
  default: break;
  }

  if (doc.contains("scheme")) c.schemes = parse_schemes(get_list(doc["scheme"], "scheme"), "scheme");
  if (doc.contains("kind")) c.kinds = parse_kinds(get_list(doc["kind"], "kind"), "kind");
  if (doc.contains("domain")) {
    c.domain = get_string(doc["domain"], "domain");
    if (c.domain != "periodic" && c.domain != "punctured")
      bad_field("domain", "expected `periodic` or `punctured`");
  }
  if (doc.contains("s")) {
    c.s = get_number(doc["s"], "s");
    if (!(c.s > 0.0) || c.s >= 0.5) bad_field("s", "spacing must lie in (0, 0.5)");
  }
  if (doc.contains("resolutions")) {
    const json &r = doc["resolutions"];
    if (!r.is_array() || r.empty()) bad_field("resolutions", "expected a non-empty array");
    c.resolutions.clear();
    for (const auto &v : r) {
      const double s = get_number(v, "resolutions");
      if (!(s > 0.0) || s >= 0.5) bad_field("resolutions", "spacings must lie in (0, 0.5)");
      c.resolutions.push_back(s);
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) bad_field("seed", "expected a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("samples")) {
    c.samples = get_int(doc["samples"], "samples");
    if (c.samples < 2) bad_field("samples", "need at least 2");
  }
  if (doc.contains("lines")) {
    c.lines.clear();
    for (const auto &l : get_list(doc["lines"], "lines")) {
      try {
        c.lines.push_back(parse_sweep_line(l));
      } catch (const ConfigError &e) {
        bad_field("lines", e.what());
      }
    }
  }
  if (doc.contains("out")) c.out = get_string(doc["out"], "out");
  if (doc.contains("Re")) {
    c.Re = get_number(doc["Re"], "Re");
    if (!(c.Re > 0.0)) bad_field("Re", "must be positive");
  }
  if (doc.contains("t_end")) {
    c.t_end = get_number(doc["t_end"], "t_end");
    if (!(c.t_end > 0.0)) bad_field("t_end", "must be positive");
  }
  if (doc.contains("output_interval")) {
    c.output_interval = get_number(doc["output_interval"], "output_interval");
    if (!(c.output_interval > 0.0)) bad_field("output_interval", "must be positive");
  }
  if (doc.contains("paper_exact_dt")) {
    if (!doc["paper_exact_dt"].is_boolean()) bad_field("paper_exact_dt", "expected true or false");
    c.paper_exact_dt = doc["paper_exact_dt"].get<bool>();
  }
  if (doc.contains("solver_tol")) {
    c.solver_tol = get_number(doc["solver_tol"], "solver_tol");
    if (!(c.solver_tol > 0.0)) bad_field("solver_tol", "must be positive");
  }
  if (doc.contains("max_iter")) {
    c.max_iter = get_int(doc["max_iter"], "max_iter");
    if (c.max_iter < 1) bad_field("max_iter", "must be positive");
  }
  if (doc.contains("restart")) {
    c.restart = get_int(doc["restart"], "restart");
    if (c.restart < 1) bad_field("restart", "must be positive");
  }

  if (c.command == Command::converge && c.resolutions.size() < 3)
    bad_field("resolutions", "a convergence study needs at least 3 spacings");
  if (c.command == Command::poisson && c.domain != "punctured")
    bad_field("domain", "the Poisson benchmark runs on the punctured square");
  return c;
}

json RunConfig::to_json() const {
  json j;
  j["command"] = to_string(command);
  j["scheme"] = schemes_json(schemes);
  j["kind"] = kinds_json(kinds);
  j["domain"] = domain;
  j["s"] = s;
  j["resolutions"] = resolutions;
  j["seed"] = seed;
  j["samples"] = samples;
  json l = json::array();
  for (auto line : lines) l.push_back(clabfm::to_string(line));
  j["lines"] = l;
  j["out"] = out;
  j["Re"] = Re;
  j["t_end"] = t_end;
  j["output_interval"] = output_interval;
  j["paper_exact_dt"] = paper_exact_dt;
  j["solver_tol"] = solver_tol;
  j["max_iter"] = max_iter;
  j["restart"] = restart;
  return j;
}

std::string RunConfig::hash() const {
  json j = to_json();
  j.erase("out");  // the same run in another directory keeps its hash
  return hex64(fnv1a64(j.dump()));
}

DomainSpec RunConfig::domain_spec() const {
  return domain == "punctured" ? DomainSpec::punctured_square() : DomainSpec::unit_periodic_square();
}

SolverOptions RunConfig::solver() const {
  SolverOptions o;
  o.tol = solver_tol;
  o.max_iter = max_iter;
  o.restart = restart;
  return o;
}

} // namespace clabfm::cli
