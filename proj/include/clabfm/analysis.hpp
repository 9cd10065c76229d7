#pragma once

#include "clabfm/global.hpp"

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace clabfm {

/// Lines through wavenumber space, named for the derivative along x. For ddy
/// the roles of k_x and k_y are swapped.
enum class SweepLine { ky_zero, ky_eq_kx, ky_eq_2kx, kx_zero };

std::string to_string(SweepLine line);
SweepLine parse_sweep_line(std::string_view text);

struct SweepSpec {
  SweepLine line = SweepLine::ky_zero;
  int samples = 64;
};

/// One sample of a resolving-power sweep.
///
/// `k_over_kny` is k_along/k_Ny for gradients and q/k_Ny for Laplacians;
/// samples are uniform in |k|/k_Ny over (0, 1].
struct SweepPoint {
  double k_over_kny = 0.0;
  double k_x = 0.0, k_y = 0.0;
  double rms_re = 0.0;
  double rms_im = 0.0;
  double eps = 0.0;
  int degenerate = 0;
};

/// RMS over nodes of Re and Im of k_eff (or q_eff^2), each carrying the sign
/// of the corresponding mean, with eps derived from rms_re. Nodes without
/// weights (Dirichlet) are skipped; degenerate responses are counted and
/// excluded.
std::vector<SweepPoint> rms_resolving_power(const DiscreteOperator &op, const SweepSpec &sweep);

/// |k_x - Re k_eff| / k_x.
double epsilon1(double k_x, double k_y, std::complex<double> k_eff);
/// |q^2 - Re q_eff^2| / q^2.
double epsilon2(double k_x, double k_y, std::complex<double> q_eff2);

struct ThresholdCrossing {
  double level = 0.0;
  std::optional<double> k_over_kny;  // empty: never exceeded within the sweep
};

/// First k/k_Ny where eps exceeds each level, interpolated linearly between
/// samples with (0, 0) as the leading anchor.
std::vector<ThresholdCrossing> threshold_crossings(const std::vector<SweepPoint> &points,
                                                   const std::vector<double> &levels = {0.001, 0.01,
                                                                                        0.1});

/// Top-hat Fourier series in x times sin(2 pi y).
double test_function(double x, double y);

struct TestDerivs {
  double dx = 0.0;
  double dy = 0.0;
  double laplacian = 0.0;
};
TestDerivs test_function_derivs(double x, double y);
/// Exact derivative of the test function for one operator kind.
double test_function_derivative(OperatorKind kind, double x, double y);

/// sqrt(sum (a - n)^2) / sqrt(sum a^2).
double l2_norm(const Eigen::VectorXd &numeric, const Eigen::VectorXd &analytic);
/// l2_norm restricted to entries where `mask` is nonzero.
double l2_norm(const Eigen::VectorXd &numeric, const Eigen::VectorXd &analytic,
               const std::vector<char> &mask);
double ratio_R(double compact_norm, double explicit_norm);

/// Least-squares slope of log(y) against log(x).
double fit_slope(const std::vector<double> &x, const std::vector<double> &y);

struct ConvergenceRow {
  double s = 0.0;
  int n = 0;
  double l2_explicit = 0.0;
  double l2_compact = 0.0;
  double R = 0.0;
};

struct ConvergenceStudy {
  OperatorKind kind = OperatorKind::ddx;
  SchemeSpec explicit_scheme, compact_scheme;
  std::vector<ConvergenceRow> rows;
  double slope_explicit = 0.0;  // over the finest three resolutions
  double slope_compact = 0.0;
};

/// Applies explicit and compact operators to the test function on fresh node
/// sets at each spacing and compares with the exact derivative.
ConvergenceStudy convergence_study(const DomainSpec &domain, const SchemeSpec &explicit_scheme,
                                   const SchemeSpec &compact_scheme, OperatorKind kind,
                                   const std::vector<double> &resolutions, std::uint64_t seed,
                                   const OptimizerSettings &settings = {},
                                   const SolverOptions &solver = {});

struct SpectrumResult {
  std::vector<std::complex<double>> eigenvalues;
  int n = 0;
  OperatorKind kind = OperatorKind::ddx;
  SchemeSpec scheme;

  double max_real() const;
  double max_abs() const;
};

/// All eigenvalues of B^-1 A by dense factorisation (N <= 2500).
SpectrumResult stability_spectrum(const GlobalOperator &op);

// CSV emitters (17 significant digits, header row first).
void write_sweep_csv(std::ostream &out, const std::vector<SweepPoint> &points);
void write_convergence_csv(std::ostream &out, const ConvergenceStudy &study);
void write_spectrum_csv(std::ostream &out, const SpectrumResult &spectrum);

} // namespace clabfm
