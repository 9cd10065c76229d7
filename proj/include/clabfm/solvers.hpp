#pragma once

#include "clabfm/analysis.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace clabfm {

struct BurgersConfig {
  double Re = 100.0;
  double s = 1.0 / 40.0;
  SchemeSpec scheme = SchemeSpec::from_label('a');
  double t_end = 1.0;
  double cfl_adv = 0.1;
  double cfl_diff = 0.05;
  int series_terms = 30;
  /// Diffusive limit cfl_diff * min(s^2) / Re instead of cfl_diff * min(s^2) * Re.
  bool paper_exact_dt = false;
  double output_interval = 0.01;
  std::uint64_t seed = 1;
  OptimizerSettings optimizer;
  SolverOptions solver;

  void validate() const;
};

struct BurgersState {
  Eigen::VectorXd u, v;
  double t = 0.0;
};

struct BurgersRates {
  Eigen::VectorXd du, dv;
};

/// ddx, ddy and Laplacian of one scheme letter on one node set.
struct BurgersOperators {
  GlobalOperator ddx, ddy, laplacian;
};

BurgersOperators build_burgers_operators(const NodeSet &nodes, const SchemeSpec &scheme,
                                         const OptimizerSettings &settings = {});

/// Running totals of GMRES iterations spent inside operator applications.
struct SolveCounter {
  long long solves = 0;
  long long iterations = 0;
};

/// du/dt = -(u u_x + v u_y) + lap(u)/Re and likewise for v.
BurgersRates burgers_rhs(const BurgersState &state, const BurgersOperators &ops, double Re,
                         const SolverOptions &solver = {}, SolveCounter *counter = nullptr);

/// min(cfl_adv * s_min / max|u|, diffusive candidate).
double compute_dt(const BurgersState &state, const BurgersConfig &config, double min_spacing);

using RateFunction = std::function<BurgersRates(const BurgersState &)>;

/// Classical four-stage Runge-Kutta step. Throws DivergenceError on NaN or Inf.
BurgersState rk4_step(const BurgersState &state, const RateFunction &rhs, double dt);

/// Modified Bessel function of the first kind by power series, 0 <= n <= 40,
/// 0 <= z <= 50.
double bessel_i(int n, double z);

/// Cole-Hopf series solution for u(x, 0) = sin(2 pi x), truncated at `terms`.
double burgers_analytic(double x, double t, double Re, int terms = 30);

struct BurgersRun {
  BurgersConfig config;
  int n = 0;
  std::vector<double> t;
  std::vector<double> l2;
  double max_l2 = 0.0;
  double max_abs_v = 0.0;
  /// Largest |sum u(t) - sum u(0)| seen at the output times.
  double momentum_drift = 0.0;
  double dt_first = 0.0;
  long long steps = 0;
  SolveCounter solver;
  bool diverged = false;
  std::string failure;
};

/// Integrates from u = sin(2 pi x), v = 0 up to t_end, recording the L2 error
/// against the analytic solution every output_interval. A divergence stops the
/// run and returns the partial series with `diverged` set.
BurgersRun run_burgers(const BurgersConfig &config);
/// As above on a caller-supplied node set.
BurgersRun run_burgers(const BurgersConfig &config, const NodeSet &nodes);

double poisson_exact(double x, double y);
double poisson_source(double x, double y);

struct PoissonConfig {
  DomainSpec domain = DomainSpec::punctured_square();
  SchemeSpec scheme = SchemeSpec::from_label('d');
  std::vector<double> resolutions{1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0};
  std::uint64_t seed = 1;
  OptimizerSettings optimizer;
  SolverOptions solver = poisson_solver_options();
};

struct PoissonRow {
  double s = 0.0;
  int n = 0;
  double l2_explicit = 0.0;
  double l2_compact = 0.0;
  double R = 0.0;
  int iterations_explicit = 0;
  int iterations_compact = 0;
  double residual_explicit = 0.0;
  double residual_compact = 0.0;
};

struct PoissonStudy {
  SchemeSpec explicit_scheme, compact_scheme;
  std::vector<PoissonRow> rows;
  double slope_explicit = 0.0;  // over all resolutions
  double slope_compact = 0.0;
};

/// Solves the Poisson problem with the explicit partner of `scheme` and with
/// `scheme` itself at every resolution.
PoissonStudy run_poisson(const PoissonConfig &config);

/// Columns t, l2.
void write_burgers_csv(std::ostream &out, const BurgersRun &run);
/// Columns s, l2_explicit, l2_compact, R.
void write_poisson_csv(std::ostream &out, const PoissonStudy &study);

} // namespace clabfm
