#include "clabfm/solvers.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace clabfm {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> cole_hopf_coefficients(double Re, int terms) {
  if (!(Re > 0.0)) throw DomainError("Reynolds number must be positive");
  if (terms < 0) throw DomainError("series term count must be non-negative");
  const double z = Re / (4.0 * kPi);
  const double scale = std::exp(-z);
  std::vector<double> a(static_cast<std::size_t>(terms) + 1);
  a[0] = scale * bessel_i(0, z);
  for (int n = 1; n <= terms; ++n) a[n] = 2.0 * scale * bessel_i(n, z);
  return a;
}

double cole_hopf_eval(const std::vector<double> &a, double x, double t, double Re) {
  double num = 0.0, den = a[0];
  for (std::size_t n = 1; n < a.size(); ++n) {
    const double nn = static_cast<double>(n);
    const double decay = a[n] * std::exp(-4.0 * nn * nn * kPi * kPi * t / Re);
    num += nn * decay * std::sin(2.0 * nn * kPi * x);
    den += decay * std::cos(2.0 * nn * kPi * x);
  }
  if (std::abs(den) < 1e-300) throw NumericalError("Cole-Hopf denominator vanished");
  return 4.0 * kPi / Re * num / den;
}

bool all_finite(const Eigen::VectorXd &v) { return v.allFinite(); }

BurgersState axpy(const BurgersState &s, double h, const BurgersRates &k) {
  BurgersState out;
  out.u = s.u + h * k.du;
  out.v = s.v + h * k.dv;
  out.t = s.t;
  return out;
}

Eigen::VectorXd apply_counted(const GlobalOperator &op, const Eigen::VectorXd &phi,
                              const SolverOptions &solver, SolveCounter *counter) {
  int its = 0;
  Eigen::VectorXd out = apply_operator(op, phi, solver, &its);
  if (counter && !op.is_explicit()) {
    ++counter->solves;
    counter->iterations += its;
  }
  return out;
}

} // namespace

void BurgersConfig::validate() const {
  if (!(Re > 0.0)) throw ConfigError("Re must be positive");
  if (!(s > 0.0)) throw ConfigError("s must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (!(cfl_adv > 0.0) || !(cfl_diff > 0.0)) throw ConfigError("CFL factors must be positive");
  if (series_terms < 1 || series_terms > 40) throw ConfigError("series_terms must be in [1, 40]");
  if (!(output_interval > 0.0)) throw ConfigError("output_interval must be positive");
}

BurgersOperators build_burgers_operators(const NodeSet &nodes, const SchemeSpec &scheme,
                                         const OptimizerSettings &settings) {
  return {assemble_global(nodes, scheme, OperatorKind::ddx, settings),
          assemble_global(nodes, scheme, OperatorKind::ddy, settings),
          assemble_global(nodes, scheme, OperatorKind::laplacian, settings)};
}

BurgersRates burgers_rhs(const BurgersState &state, const BurgersOperators &ops, double Re,
                         const SolverOptions &solver, SolveCounter *counter) {
  const Eigen::VectorXd ux = apply_counted(ops.ddx, state.u, solver, counter);
  const Eigen::VectorXd uy = apply_counted(ops.ddy, state.u, solver, counter);
  const Eigen::VectorXd ul = apply_counted(ops.laplacian, state.u, solver, counter);
  const Eigen::VectorXd vx = apply_counted(ops.ddx, state.v, solver, counter);
  const Eigen::VectorXd vy = apply_counted(ops.ddy, state.v, solver, counter);
  const Eigen::VectorXd vl = apply_counted(ops.laplacian, state.v, solver, counter);
  BurgersRates r;
  r.du = -(state.u.cwiseProduct(ux) + state.v.cwiseProduct(uy)) + ul / Re;
  r.dv = -(state.u.cwiseProduct(vx) + state.v.cwiseProduct(vy)) + vl / Re;
  return r;
}

double compute_dt(const BurgersState &state, const BurgersConfig &config, double min_spacing) {
  const double s2 = min_spacing * min_spacing;
  const double diffusive =
      config.paper_exact_dt ? config.cfl_diff * s2 / config.Re : config.cfl_diff * s2 * config.Re;
  const double umax = state.u.size() ? state.u.cwiseAbs().maxCoeff() : 0.0;
  if (umax == 0.0) return diffusive;
  return std::min(config.cfl_adv * min_spacing / umax, diffusive);
}

BurgersState rk4_step(const BurgersState &state, const RateFunction &rhs, double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const BurgersRates k1 = rhs(state);
  BurgersState s2 = axpy(state, 0.5 * dt, k1);
  s2.t = state.t + 0.5 * dt;
  const BurgersRates k2 = rhs(s2);
  BurgersState s3 = axpy(state, 0.5 * dt, k2);
  s3.t = state.t + 0.5 * dt;
  const BurgersRates k3 = rhs(s3);
  BurgersState s4 = axpy(state, dt, k3);
  s4.t = state.t + dt;
  const BurgersRates k4 = rhs(s4);

  BurgersState out;
  out.u = state.u + dt / 6.0 * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
  out.v = state.v + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  out.t = state.t + dt;
  if (!all_finite(out.u) || !all_finite(out.v)) throw DivergenceError(out.t);
  return out;
}

double bessel_i(int n, double z) {
  if (n < 0 || n > 40) throw DomainError("bessel_i: order outside [0, 40]");
  if (!(z >= 0.0) || z > 50.0) throw DomainError("bessel_i: argument outside [0, 50]");
  if (z == 0.0) return n == 0 ? 1.0 : 0.0;
  const double half = 0.5 * z;
  // Leading term (z/2)^n / n!
  double term = 1.0;
  for (int k = 1; k <= n; ++k) term *= half / k;
  double sum = term;
  const double q = half * half;
  for (int k = 1; k < 1000; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + n));
    sum += term;
    if (k > half && term < 1e-17 * sum) break;
  }
  return sum;
}

double burgers_analytic(double x, double t, double Re, int terms) {
  if (t < 0.0) throw DomainError("burgers_analytic: negative time");
  return cole_hopf_eval(cole_hopf_coefficients(Re, terms), x, t, Re);
}

BurgersRun run_burgers(const BurgersConfig &config) {
  config.validate();
  return run_burgers(config, generate_nodes(DomainSpec::unit_periodic_square(), config.s,
                                            config.seed));
}

BurgersRun run_burgers(const BurgersConfig &config, const NodeSet &nodes) {
  config.validate();
  BurgersRun run;
  run.config = config;
  const int n = nodes.size();
  run.n = n;
  const BurgersOperators ops = build_burgers_operators(nodes, config.scheme, config.optimizer);
  const auto coeffs = cole_hopf_coefficients(config.Re, config.series_terms);
  const double s_min = *std::min_element(nodes.spacing.begin(), nodes.spacing.end());

  BurgersState state;
  state.u.resize(n);
  state.v = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) state.u[i] = std::sin(2.0 * kPi * nodes.positions[i].x);
  const double momentum0 = state.u.sum();

  auto record = [&](const BurgersState &s) {
    Eigen::VectorXd exact(n);
    for (int i = 0; i < n; ++i) exact[i] = cole_hopf_eval(coeffs, nodes.positions[i].x, s.t, config.Re);
    const double err = l2_norm(s.u, exact);
    run.t.push_back(s.t);
    run.l2.push_back(err);
    run.max_l2 = std::max(run.max_l2, err);
    run.max_abs_v = std::max(run.max_abs_v, s.v.cwiseAbs().maxCoeff());
    run.momentum_drift = std::max(run.momentum_drift, std::abs(s.u.sum() - momentum0));
  };
  record(state);

  auto rhs = [&](const BurgersState &s) {
    return burgers_rhs(s, ops, config.Re, config.solver, &run.solver);
  };
  const long long outputs =
      static_cast<long long>(std::llround(config.t_end / config.output_interval));
  try {
    for (long long k = 1; k <= std::max(outputs, 1LL); ++k) {
      const double target = std::min(config.t_end, static_cast<double>(k) * config.output_interval);
      while (state.t < target) {
        double dt = compute_dt(state, config, s_min);
        if (run.steps == 0) run.dt_first = dt;
        const bool lands = state.t + dt >= target - 1e-12 * target;
        if (lands) dt = target - state.t;
        state = rk4_step(state, rhs, dt);
        if (lands) state.t = target;
        ++run.steps;
      }
      record(state);
    }
  } catch (const DivergenceError &e) {
    run.diverged = true;
    run.failure = e.what();
  }
  return run;
}

double poisson_exact(double x, double y) { return std::sin(2.0 * kPi * x) * std::sin(2.0 * kPi * y); }

double poisson_source(double x, double y) { return -8.0 * kPi * kPi * poisson_exact(x, y); }

PoissonStudy run_poisson(const PoissonConfig &config) {
  if (config.resolutions.empty()) throw ConfigError("poisson: no resolutions given");
  PoissonStudy study;
  study.compact_scheme = config.scheme;
  study.explicit_scheme = config.scheme.explicit_partner();

  for (double s : config.resolutions) {
    const NodeSet nodes = generate_nodes(config.domain, s, config.seed);
    const int n = nodes.size();
    Eigen::VectorXd f(n), g(n);
    std::vector<char> mask(n);
    for (int i = 0; i < n; ++i) {
      const Vec2 p = nodes.positions[i];
      f[i] = poisson_source(p.x, p.y);
      g[i] = poisson_exact(p.x, p.y);
      mask[i] = nodes.is_dirichlet(i) ? 0 : 1;
    }
    PoissonRow row;
    row.s = s;
    row.n = n;
    auto solve = [&](const SchemeSpec &scheme, double &l2, int &its, double &res) {
      const PoissonSystem sys = assemble_poisson(nodes, scheme, config.optimizer);
      const SolveResult r = solve_poisson(sys, f, g, config.solver);
      l2 = l2_norm(r.x, g, mask);
      its = r.iterations;
      res = r.residual;
    };
    solve(study.explicit_scheme, row.l2_explicit, row.iterations_explicit, row.residual_explicit);
    if (config.scheme == study.explicit_scheme) {
      row.l2_compact = row.l2_explicit;
      row.iterations_compact = row.iterations_explicit;
      row.residual_compact = row.residual_explicit;
    } else {
      solve(config.scheme, row.l2_compact, row.iterations_compact, row.residual_compact);
    }
    row.R = ratio_R(row.l2_compact, row.l2_explicit);
    study.rows.push_back(row);
  }
  if (study.rows.size() >= 2) {
    std::vector<double> s, le, lc;
    for (const auto &r : study.rows) {
      s.push_back(r.s);
      le.push_back(r.l2_explicit);
      lc.push_back(r.l2_compact);
    }
    study.slope_explicit = fit_slope(s, le);
    study.slope_compact = fit_slope(s, lc);
  }
  return study;
}

void write_burgers_csv(std::ostream &out, const BurgersRun &run) {
  out << "t,l2\n";
  for (std::size_t k = 0; k < run.t.size(); ++k)
    out << format_double(run.t[k]) << ',' << format_double(run.l2[k]) << '\n';
}

void write_poisson_csv(std::ostream &out, const PoissonStudy &study) {
  out << "s,l2_explicit,l2_compact,R\n";
  for (const auto &r : study.rows)
    out << format_double(r.s) << ',' << format_double(r.l2_explicit) << ','
        << format_double(r.l2_compact) << ',' << format_double(r.R) << '\n';
}

} // namespace clabfm
