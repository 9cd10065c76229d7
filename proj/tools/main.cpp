#include "run_config.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"
#include "clabfm/solvers.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace clabfm;
using namespace clabfm::cli;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// Re-throws errors from one pipeline stage with the module name prefixed.
template <typename F>
auto in_module(const char *module, F &&f) {
  try {
    return f();
  } catch (const ConfigError &e) {
    throw ConfigError(std::string(module) + ": " + e.what());
  } catch (const NumericalError &e) {
    throw NumericalError(std::string(module) + ": " + e.what());
  }
}

std::string spacing_tag(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

double parse_spacing(const std::string &text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return parse_double(text);
  return parse_double(text.substr(0, slash)) / parse_double(text.substr(slash + 1));
}

class Writer {
public:
  explicit Writer(const RunConfig &config) : config_(config) {}

  /// Writes `csv` to dir/name and the sidecar dir/name.json.
  void emit(const fs::path &dir, const std::string &name, const std::string &csv, json info) const {
    write_text_file(dir / name, csv);
    json meta;
    meta["file"] = name;
    meta["config_hash"] = config_.hash();
    meta["config"] = config_.to_json();
    json ov = json::array();
    for (const auto &o : config_.overrides)
      ov.push_back({{"key", o.key}, {"file", o.file_value}, {"flag", o.flag_value}});
    meta["overrides"] = ov;
    meta["result"] = std::move(info);
    write_text_file(dir / (name + ".json"), meta.dump(2) + "\n");
    std::cout << (dir / name).string() << '\n';
  }

  /// One directory per scheme when a run covers several schemes.
  fs::path scheme_dir(char scheme) const {
    return config_.schemes.size() > 1 ? fs::path(config_.out) / std::string(1, scheme)
                                      : fs::path(config_.out);
  }

private:
  const RunConfig &config_;
};

std::vector<SweepLine> lines_for(const RunConfig &c, OperatorKind kind) {
  std::vector<SweepLine> all{SweepLine::ky_zero, SweepLine::ky_eq_kx, SweepLine::ky_eq_2kx};
  if (kind == OperatorKind::laplacian) all.push_back(SweepLine::kx_zero);
  if (c.lines.empty()) return all;
  std::vector<SweepLine> out;
  for (auto l : c.lines) {
    if (l == SweepLine::kx_zero && kind != OperatorKind::laplacian) continue;
    out.push_back(l);
  }
  return out;
}

json crossings_json(const std::vector<ThresholdCrossing> &cs) {
  json a = json::array();
  for (const auto &c : cs)
    a.push_back({{"level", c.level},
                 {"k_over_kny", c.k_over_kny ? json(*c.k_over_kny) : json(nullptr)}});
  return a;
}

NodeSet make_nodes(const RunConfig &c, double s) {
  return in_module("geometry", [&] { return generate_nodes(c.domain_spec(), s, c.seed); });
}

void run_nodes(const RunConfig &c, const Writer &w) {
  const NodeSet nodes = make_nodes(c, c.s);
  std::ostringstream csv;
  write_nodes_csv(csv, nodes);
  int dirichlet = 0;
  for (int i = 0; i < nodes.size(); ++i) dirichlet += nodes.is_dirichlet(i);
  w.emit(c.out, "nodes.csv", csv.str(),
         {{"n", nodes.size()}, {"dirichlet", dirichlet}, {"mean_spacing", nodes.mean_spacing()}});
}

void run_rp(const RunConfig &c, const Writer &w) {
  const NodeSet nodes = make_nodes(c, c.s);
  for (char label : c.schemes) {
    const SchemeSpec scheme = SchemeSpec::from_label(label);
    for (OperatorKind kind : c.kinds) {
      const DiscreteOperator op =
          in_module("compact", [&] { return build_operator(nodes, scheme, kind); });
      for (SweepLine line : lines_for(c, kind)) {
        const auto points =
            in_module("analysis", [&] { return rms_resolving_power(op, {line, c.samples}); });
        std::ostringstream csv;
        write_sweep_csv(csv, points);
        const std::string name = "rp_" + std::string(1, label) + "_" + to_string(kind) + "_" +
                                 to_string(line) + ".csv";
        w.emit(c.out, name, csv.str(),
               {{"n", nodes.size()},
                {"fallback_nodes", op.fallback_count},
                {"crossings", crossings_json(threshold_crossings(points))}});
      }
    }
  }
}

void run_converge(const RunConfig &c, const Writer &w) {
  for (char label : c.schemes) {
    const SchemeSpec scheme = SchemeSpec::from_label(label);
    for (OperatorKind kind : c.kinds) {
      const ConvergenceStudy study = in_module("analysis", [&] {
        return convergence_study(c.domain_spec(), scheme.explicit_partner(), scheme, kind,
                                 c.resolutions, c.seed, {}, c.solver());
      });
      std::ostringstream csv;
      write_convergence_csv(csv, study);
      json n = json::array();
      for (const auto &r : study.rows) n.push_back(r.n);
      w.emit(w.scheme_dir(label), "conv_" + to_string(kind) + ".csv", csv.str(),
             {{"explicit_scheme", std::string(1, study.explicit_scheme.label)},
              {"compact_scheme", std::string(1, label)},
              {"n", n},
              {"slope_explicit", study.slope_explicit},
              {"slope_compact", study.slope_compact}});
    }
  }
}

void run_stability(const RunConfig &c, const Writer &w) {
  const NodeSet nodes = make_nodes(c, c.s);
  for (char label : c.schemes) {
    const SchemeSpec scheme = SchemeSpec::from_label(label);
    for (OperatorKind kind : c.kinds) {
      const GlobalOperator op =
          in_module("global_ops", [&] { return assemble_global(nodes, scheme, kind); });
      const SpectrumResult spectrum = in_module("analysis", [&] { return stability_spectrum(op); });
      std::ostringstream csv;
      write_spectrum_csv(csv, spectrum);
      w.emit(c.out, "spectrum_" + std::string(1, label) + "_" + to_string(kind) + ".csv", csv.str(),
             {{"n", spectrum.n}, {"max_real", spectrum.max_real()}, {"max_abs", spectrum.max_abs()}});
    }
  }
}

/// Returns false if any run diverged.
bool run_burgers_cmd(const RunConfig &c, const Writer &w) {
  bool ok = true;
  const NodeSet nodes = make_nodes(c, c.s);
  for (char label : c.schemes) {
    BurgersConfig bc;
    bc.Re = c.Re;
    bc.s = c.s;
    bc.scheme = SchemeSpec::from_label(label);
    bc.t_end = c.t_end;
    bc.output_interval = c.output_interval;
    bc.paper_exact_dt = c.paper_exact_dt;
    bc.seed = c.seed;
    bc.solver = c.solver();
    const BurgersRun run = in_module("solvers", [&] { return run_burgers(bc, nodes); });
    std::ostringstream csv;
    write_burgers_csv(csv, run);
    const double avg = run.solver.solves ? double(run.solver.iterations) / run.solver.solves : 0.0;
    w.emit(c.out, "burgers_" + std::string(1, label) + "_" + spacing_tag(c.s) + ".csv", csv.str(),
           {{"n", run.n},
            {"dt_convention", c.paper_exact_dt ? "0.05 min(s^2) / Re" : "0.05 min(s^2) * Re"},
            {"paper_exact_dt", c.paper_exact_dt},
            {"dt_first", run.dt_first},
            {"steps", run.steps},
            {"max_l2", run.max_l2},
            {"max_abs_v", run.max_abs_v},
            {"momentum_drift", run.momentum_drift},
            {"solver_solves", run.solver.solves},
            {"solver_iterations", run.solver.iterations},
            {"mean_iterations_per_solve", avg},
            {"diverged", run.diverged},
            {"failure", run.failure}});
    if (run.diverged) {
      std::cerr << "clabfm burgers: solvers: scheme " << label << ": " << run.failure << '\n';
      ok = false;
    }
  }
  return ok;
}

void run_poisson_cmd(const RunConfig &c, const Writer &w) {
  for (char label : c.schemes) {
    PoissonConfig pc;
    pc.domain = c.domain_spec();
    pc.scheme = SchemeSpec::from_label(label);
    pc.resolutions = c.resolutions;
    pc.seed = c.seed;
    pc.solver = poisson_solver_options();
    pc.solver.tol = c.solver_tol;
    pc.solver.max_iter = c.max_iter;
    pc.solver.restart = c.restart;
    const PoissonStudy study = in_module("solvers", [&] { return run_poisson(pc); });
    std::ostringstream csv;
    write_poisson_csv(csv, study);
    json rows = json::array();
    for (const auto &r : study.rows)
      rows.push_back({{"s", r.s},
                      {"n", r.n},
                      {"iterations_explicit", r.iterations_explicit},
                      {"iterations_compact", r.iterations_compact},
                      {"residual_explicit", r.residual_explicit},
                      {"residual_compact", r.residual_compact}});
    w.emit(w.scheme_dir(label), "poisson_laplacian.csv", csv.str(),
           {{"explicit_scheme", std::string(1, study.explicit_scheme.label)},
            {"compact_scheme", std::string(1, label)},
            {"rows", rows},
            {"slope_explicit", study.slope_explicit},
            {"slope_compact", study.slope_compact}});
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Compact LABFM derivative operators and benchmarks"};
  std::string command, config_path, scheme, kind, s_text, out;
  std::uint64_t seed = 0;
  bool paper_exact_dt = false;
  app.add_option("command", command, "nodes | rp | converge | stability | burgers | poisson");
  app.add_option("--config", config_path, "JSON config file");
  auto *scheme_opt = app.add_option("--scheme", scheme, "scheme label(s) a..h, comma separated");
  auto *kind_opt = app.add_option("--kind", kind, "ddx | ddy | laplacian, comma separated");
  auto *s_opt = app.add_option("--s", s_text, "node spacing, e.g. 0.025 or 1/40");
  auto *seed_opt = app.add_option("--seed", seed, "node generator seed");
  auto *out_opt = app.add_option("--out", out, "output directory");
  app.add_flag("--paper-exact-dt", paper_exact_dt, "diffusive time step 0.05 min(s^2)/Re");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  RunConfig config;
  try {
    FlagValues flags;
    if (!command.empty()) flags.command = command;
    if (*scheme_opt) flags.scheme = scheme;
    if (*kind_opt) flags.kind = kind;
    if (*s_opt) flags.s = parse_spacing(s_text);
    if (*seed_opt) flags.seed = seed;
    if (*out_opt) flags.out = out;
    flags.paper_exact_dt = paper_exact_dt;
    if (config_path.empty()) {
      config = parse_config(nullptr, flags);
    } else {
      const json file = load_config_file(config_path);
      config = parse_config(&file, flags);
    }
  } catch (const ConfigError &e) {
    std::cerr << "clabfm: cli: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::string name = to_string(config.command);
  try {
    const Writer w(config);
    bool ok = true;
    switch (config.command) {
    case Command::nodes: run_nodes(config, w); break;
    case Command::rp: run_rp(config, w); break;
    case Command::converge: run_converge(config, w); break;
    case Command::stability: run_stability(config, w); break;
    case Command::burgers: ok = run_burgers_cmd(config, w); break;
    case Command::poisson: run_poisson_cmd(config, w); break;
    }
    return ok ? 0 : kExitNumerical;
  } catch (const ConfigError &e) {
    std::cerr << "clabfm " << name << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError &e) {
    std::cerr << "clabfm " << name << ": " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception &e) {
    std::cerr << "clabfm " << name << ": " << e.what() << '\n';
    return kExitNumerical;
  }
}
