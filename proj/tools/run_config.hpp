#pragma once

#include "clabfm/analysis.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace clabfm::cli {

enum class Command { nodes, rp, converge, stability, burgers, poisson };

std::string to_string(Command c);
Command parse_command(std::string_view text);

/// Values given on the command line. Unset members leave the file value alone.
struct FlagValues {
  std::optional<std::string> command;
  std::optional<std::string> scheme;  // comma-separated labels
  std::optional<std::string> kind;    // comma-separated kinds
  std::optional<double> s;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool paper_exact_dt = false;
};

struct Override {
  std::string key;
  nlohmann::json file_value;
  nlohmann::json flag_value;
};

struct RunConfig {
  Command command = Command::rp;
  std::vector<char> schemes{'a'};
  std::vector<OperatorKind> kinds{OperatorKind::ddx};
  std::string domain = "periodic";  // periodic | punctured
  double s = 1.0 / 40.0;
  std::vector<double> resolutions;
  std::uint64_t seed = 1;
  int samples = 64;
  std::vector<SweepLine> lines;  // empty: every line valid for the kind
  std::string out = ".";
  double Re = 100.0;
  double t_end = 1.0;
  double output_interval = 0.01;
  bool paper_exact_dt = false;
  double solver_tol = 1e-12;
  int max_iter = 2000;
  int restart = 30;

  std::vector<Override> overrides;

  /// Resolved values, flags already applied; excludes the override record.
  nlohmann::json to_json() const;
  /// FNV-1a of the canonical JSON dump of to_json() without `out`.
  std::string hash() const;
  DomainSpec domain_spec() const;
  SolverOptions solver() const;
};

/// Keys accepted in a config file.
const std::vector<std::string> &config_keys();

/// Builds a config from an optional JSON document and command-line flags.
/// Flags win over file values and every conflict is recorded in `overrides`.
/// Throws ConfigError naming the offending field.
RunConfig parse_config(const nlohmann::json *file, const FlagValues &flags);

/// Reads a JSON file; ConfigError on I/O or syntax errors.
nlohmann::json load_config_file(const std::string &path);

} // namespace clabfm::cli
