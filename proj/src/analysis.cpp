#include "clabfm/analysis.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace clabfm {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kTestTerms = 8;

double signed_rms(double sum_sq, double sum, int n) {
  const double rms = std::sqrt(sum_sq / n);
  return sum < 0.0 ? -rms : rms;
}

} // namespace

std::string to_string(SweepLine line) {
  switch (line) {
  case SweepLine::ky_zero: return "ky0";
  case SweepLine::ky_eq_kx: return "kykx";
  case SweepLine::ky_eq_2kx: return "ky2kx";
  case SweepLine::kx_zero: return "kx0";
  }
  return "?";
}

SweepLine parse_sweep_line(std::string_view text) {
  if (text == "ky0") return SweepLine::ky_zero;
  if (text == "kykx") return SweepLine::ky_eq_kx;
  if (text == "ky2kx") return SweepLine::ky_eq_2kx;
  if (text == "kx0") return SweepLine::kx_zero;
  throw ConfigError("unknown sweep line `" + std::string(text) + "` (ky0|kykx|ky2kx|kx0)");
}

std::vector<SweepPoint> rms_resolving_power(const DiscreteOperator &op, const SweepSpec &sweep) {
  if (sweep.samples < 2) throw ConfigError("a sweep needs at least 2 samples");
  const bool gradient = op.kind != OperatorKind::laplacian;
  if (gradient && sweep.line == SweepLine::kx_zero)
    throw ConfigError("the k_x = 0 line is only defined for Laplacian sweeps");

  // unit direction along the line, in (along, across) coordinates
  double da = 1.0, dc = 0.0;
  switch (sweep.line) {
  case SweepLine::ky_zero: break;
  case SweepLine::ky_eq_kx: da = dc = 1.0 / std::sqrt(2.0); break;
  case SweepLine::ky_eq_2kx:
    da = 1.0 / std::sqrt(5.0);
    dc = 2.0 / std::sqrt(5.0);
    break;
  case SweepLine::kx_zero:
    da = 0.0;
    dc = 1.0;
    break;
  }
  const bool swap = op.kind == OperatorKind::ddy;
  const double k_ny = kPi / op.nodes.mean_spacing();

  std::vector<SweepPoint> out;
  out.reserve(sweep.samples);
  for (int t = 1; t <= sweep.samples; ++t) {
    const double frac = static_cast<double>(t) / sweep.samples;
    const double along = frac * k_ny * da, across = frac * k_ny * dc;
    SweepPoint p;
    p.k_x = swap ? across : along;
    p.k_y = swap ? along : across;
    p.k_over_kny = gradient ? along / k_ny : frac;

    double sre = 0.0, sre2 = 0.0, sim = 0.0, sim2 = 0.0;
    int n = 0;
    for (int i = 0; i < op.nodes.size(); ++i) {
      if (!op.has_weights(i)) continue;
      WavenumberResponse r;
      try {
        r = effective_response(op.nodes, op.weights[i], op.stencils[i], p.k_x, p.k_y);
      } catch (const NumericalError &) {
        ++p.degenerate;
        continue;
      }
      if (!std::isfinite(r.value.real()) || !std::isfinite(r.value.imag())) {
        ++p.degenerate;
        continue;
      }
      sre += r.value.real();
      sre2 += r.value.real() * r.value.real();
      sim += r.value.imag();
      sim2 += r.value.imag() * r.value.imag();
      ++n;
    }
    if (n == 0) throw NumericalError("resolving-power sweep: no node gave a finite response");
    p.rms_re = signed_rms(sre2, sre, n);
    p.rms_im = signed_rms(sim2, sim, n);
    if (gradient) {
      const double target = along;
      p.eps = std::abs(target - p.rms_re) / target;
    } else {
      p.eps = epsilon2(p.k_x, p.k_y, {p.rms_re, 0.0});
    }
    out.push_back(p);
  }
  return out;
}

double epsilon1(double k_x, double /*k_y*/, std::complex<double> k_eff) {
  if (k_x == 0.0) throw DomainError("epsilon1 is undefined at k_x = 0");
  return std::abs(k_x - k_eff.real()) / std::abs(k_x);
}

double epsilon2(double k_x, double k_y, std::complex<double> q_eff2) {
  const double q2 = k_x * k_x + k_y * k_y;
  if (q2 == 0.0) throw DomainError("epsilon2 is undefined at the origin");
  return std::abs(q2 - q_eff2.real()) / q2;
}

std::vector<ThresholdCrossing> threshold_crossings(const std::vector<SweepPoint> &points,
                                                   const std::vector<double> &levels) {
  std::vector<ThresholdCrossing> out;
  for (double level : levels) {
    ThresholdCrossing c;
    c.level = level;
    double pk = 0.0, pe = 0.0;
    for (const auto &p : points) {
      if (p.eps > level) {
        const double f = (level - pe) / (p.eps - pe);
        c.k_over_kny = pk + f * (p.k_over_kny - pk);
        break;
      }
      pk = p.k_over_kny;
      pe = p.eps;
    }
    out.push_back(c);
  }
  return out;
}

double test_function(double x, double y) {
  double sum = 0.0;
  for (int k = 1; k <= kTestTerms; ++k) {
    const int n = 2 * k - 1;
    sum += std::sin(2.0 * n * kPi * (x - 0.25)) / n;
  }
  return std::sin(2.0 * kPi * y) * (4.0 / kPi) * sum;
}

TestDerivs test_function_derivs(double x, double y) {
  double t = 0.0, t1 = 0.0, t2 = 0.0;
  for (int k = 1; k <= kTestTerms; ++k) {
    const int n = 2 * k - 1;
    const double w = 2.0 * n * kPi;
    const double arg = w * (x - 0.25);
    t += std::sin(arg) / n;
    t1 += w * std::cos(arg) / n;
    t2 -= w * w * std::sin(arg) / n;
  }
  const double c = 4.0 / kPi;
  t *= c;
  t1 *= c;
  t2 *= c;
  const double sy = std::sin(2.0 * kPi * y), cy = std::cos(2.0 * kPi * y);
  TestDerivs d;
  d.dx = sy * t1;
  d.dy = 2.0 * kPi * cy * t;
  d.laplacian = sy * t2 - 4.0 * kPi * kPi * sy * t;
  return d;
}

double test_function_derivative(OperatorKind kind, double x, double y) {
  const TestDerivs d = test_function_derivs(x, y);
  switch (kind) {
  case OperatorKind::ddx: return d.dx;
  case OperatorKind::ddy: return d.dy;
  case OperatorKind::laplacian: return d.laplacian;
  }
  return 0.0;
}

double l2_norm(const Eigen::VectorXd &numeric, const Eigen::VectorXd &analytic) {
  return l2_norm(numeric, analytic, std::vector<char>(analytic.size(), 1));
}

double l2_norm(const Eigen::VectorXd &numeric, const Eigen::VectorXd &analytic,
               const std::vector<char> &mask) {
  if (numeric.size() != analytic.size() || static_cast<Eigen::Index>(mask.size()) != analytic.size())
    throw ConfigError("l2_norm: field size mismatch");
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    if (!mask[i]) continue;
    const double d = analytic[i] - numeric[i];
    num += d * d;
    den += analytic[i] * analytic[i];
  }
  if (den == 0.0) throw DomainError("l2_norm: analytic field is identically zero");
  return std::sqrt(num) / std::sqrt(den);
}

double ratio_R(double compact_norm, double explicit_norm) {
  if (explicit_norm == 0.0) throw DomainError("ratio_R: explicit norm is zero");
  return compact_norm / explicit_norm;
}

double fit_slope(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_slope needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw DomainError("fit_slope: values must be positive");
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy convergence_study(const DomainSpec &domain, const SchemeSpec &explicit_scheme,
                                   const SchemeSpec &compact_scheme, OperatorKind kind,
                                   const std::vector<double> &resolutions, std::uint64_t seed,
                                   const OptimizerSettings &settings, const SolverOptions &solver) {
  if (resolutions.size() < 3) throw ConfigError("a convergence study needs at least 3 resolutions");
  ConvergenceStudy study;
  study.kind = kind;
  study.explicit_scheme = explicit_scheme;
  study.compact_scheme = compact_scheme;
  for (double s : resolutions) {
    const NodeSet nodes = generate_nodes(domain, s, seed);
    const int n = nodes.size();
    Eigen::VectorXd phi(n), exact(n);
    std::vector<char> mask(n);
    for (int i = 0; i < n; ++i) {
      const Vec2 p = nodes.positions[i];
      phi[i] = test_function(p.x, p.y);
      exact[i] = test_function_derivative(kind, p.x, p.y);
      mask[i] = nodes.is_dirichlet(i) ? 0 : 1;
    }
    ConvergenceRow row;
    row.s = s;
    row.n = n;
    const GlobalOperator ex = assemble_global(nodes, explicit_scheme, kind, settings);
    row.l2_explicit = l2_norm(apply_operator(ex, phi, solver), exact, mask);
    if (compact_scheme == explicit_scheme) {
      row.l2_compact = row.l2_explicit;
    } else {
      const GlobalOperator cp = assemble_global(nodes, compact_scheme, kind, settings);
      row.l2_compact = l2_norm(apply_operator(cp, phi, solver), exact, mask);
    }
    row.R = ratio_R(row.l2_compact, row.l2_explicit);
    study.rows.push_back(row);
  }
  auto rows = study.rows;
  std::sort(rows.begin(), rows.end(), [](const auto &a, const auto &b) { return a.s < b.s; });
  std::vector<double> s, le, lc;
  for (std::size_t k = 0; k < 3; ++k) {
    s.push_back(rows[k].s);
    le.push_back(rows[k].l2_explicit);
    lc.push_back(rows[k].l2_compact);
  }
  study.slope_explicit = fit_slope(s, le);
  study.slope_compact = fit_slope(s, lc);
  return study;
}

double SpectrumResult::max_real() const {
  double m = -INFINITY;
  for (const auto &l : eigenvalues) m = std::max(m, l.real());
  return m;
}

double SpectrumResult::max_abs() const {
  double m = 0.0;
  for (const auto &l : eigenvalues) m = std::max(m, std::abs(l));
  return m;
}

SpectrumResult stability_spectrum(const GlobalOperator &op) {
  const int n = op.size();
  if (n > 2500) throw ConfigError("stability_spectrum: dense solve limited to N <= 2500");
  Eigen::MatrixXd m = op.A.to_dense();
  if (!op.is_explicit()) {
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(op.B.to_dense());
    m = lu.solve(m);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("stability_spectrum: eigensolver failed");
  SpectrumResult out;
  out.n = n;
  out.kind = op.kind;
  out.scheme = op.scheme;
  const auto &ev = es.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return out;
}

void write_sweep_csv(std::ostream &out, const std::vector<SweepPoint> &points) {
  out << "k_over_kny,rms_re,rms_im,eps\n";
  for (const auto &p : points)
    out << format_double(p.k_over_kny) << ',' << format_double(p.rms_re) << ','
        << format_double(p.rms_im) << ',' << format_double(p.eps) << '\n';
}

void write_convergence_csv(std::ostream &out, const ConvergenceStudy &study) {
  out << "s,l2_explicit,l2_compact,R\n";
  for (const auto &r : study.rows)
    out << format_double(r.s) << ',' << format_double(r.l2_explicit) << ','
        << format_double(r.l2_compact) << ',' << format_double(r.R) << '\n';
}

void write_spectrum_csv(std::ostream &out, const SpectrumResult &spectrum) {
  out << "re,im\n";
  for (const auto &l : spectrum.eigenvalues)
    out << format_double(l.real()) << ',' << format_double(l.imag()) << '\n';
}

} // namespace clabfm
