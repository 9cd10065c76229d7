#pragma once

#include "clabfm/geometry.hpp"
#include "clabfm/labfm.hpp"

#include <array>
#include <complex>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace clabfm {

enum class SchemeMode { explicit_scheme, compact_scheme };

/// One of the labelled discretisation schemes (a)-(h).
///
/// (a)-(d) converge at second order, (e)-(h) at fourth. Gradients use an
/// implicit stencil of Q nodes, Laplacians the union of the x and y choices
/// (2Q - 1 nodes). Explicit schemes have Q = 1.
struct SchemeSpec {
  char label = 'a';
  int order = 2;
  SchemeMode mode = SchemeMode::explicit_scheme;
  int q = 1;

  bool is_compact() const { return mode == SchemeMode::compact_scheme; }
  /// Polynomial consistency: order for gradients, order + 1 for Laplacians.
  int consistency(OperatorKind kind) const;
  /// Stencil scale h/s per operator and order (1.2, 1.35, 1.4, 1.7).
  double h_over_s(OperatorKind kind) const;
  /// Nominal implicit stencil size (Q or 2Q - 1).
  int implicit_size(OperatorKind kind) const;

  static SchemeSpec from_label(char label);
  static const std::array<SchemeSpec, 8> &all();
  /// The explicit scheme of the same order.
  SchemeSpec explicit_partner() const { return from_label(order == 2 ? 'a' : 'e'); }

  friend bool operator==(const SchemeSpec &, const SchemeSpec &) = default;
};

/// Node i followed by the Q - 1 neighbors closest to the line through i along
/// the derivative direction (smallest |y_ji| for ddx, |x_ji| for ddy). Ties
/// prefer smaller |r_ji|, then smaller index. Laplacians take the union of
/// both choices.
std::vector<int> select_implicit_stencil(int i, const NodeSet &nodes, OperatorKind kind, int q);

/// alpha_q = exp(-(a_x^2 x_qi^2 + a_y^2 y_qi^2) / s^2) over the given offsets.
std::vector<double> alpha_from_params(std::span<const Vec2> offsets, double a_x, double a_y,
                                      double s);
std::vector<double> alpha_from_params(int i, const NodeSet &nodes, std::span<const int> members,
                                      double a_x, double a_y);

/// Fourier response of one node's scheme at wavenumber (k_x, k_y).
///
/// For gradients `value` is k_eff and the intermediates are (gamma1, gamma2,
/// lambda1, lambda2); for Laplacians `value` is q_eff^2 with the hatted
/// quantities in the same fields.
struct WavenumberResponse {
  double k_x = 0.0;
  double k_y = 0.0;
  std::complex<double> value;
  double gamma1 = 0.0, gamma2 = 0.0, lambda1 = 0.0, lambda2 = 0.0;
};

WavenumberResponse k_eff(const NodeSet &nodes, const LocalWeights &weights,
                         const CompactStencil &stencil, double k_x, double k_y);
WavenumberResponse q_eff2(const NodeSet &nodes, const LocalWeights &weights,
                          const CompactStencil &stencil, double k_x, double k_y);
/// Dispatches on the stencil kind.
WavenumberResponse effective_response(const NodeSet &nodes, const LocalWeights &weights,
                                      const CompactStencil &stencil, double k_x, double k_y);

/// Re{k_eff}/k_along for gradients, Re{q_eff^2}/q^2 for Laplacians.
double response_ratio(OperatorKind kind, const WavenumberResponse &r);

/// Shape of the gradient sample set: the full square (0, k_Ny] x [0, k_Ny] or
/// a polar sector around the derivative axis.
enum class SampleRegion { square, sector };

struct OptimizerSettings {
  double a_initial = 5.0;
  double a_step = 0.01;
  double a_min = 0.1;
  double excitation_bound = 1.005;
  double coefficient_sum_bound = 2.0;
  int radial_samples = 16;
  int angular_samples = 16;
  SampleRegion gradient_region = SampleRegion::square;
  /// Also stop the Laplacian loop once the off-centre coefficients sum past
  /// coefficient_sum_bound.
  bool laplacian_sum_guard = false;
  /// Lower bound for the gradient cross-axis parameter: a_min, or the
  /// current along-axis value.
  bool across_at_least_along = true;
  /// Also stop once the mean relative deviation of Re{response} from its
  /// target over the sample grid stops decreasing.
  bool stop_when_deviation_grows = true;
  /// Measure that deviation only at samples inside the Nyquist disk.
  bool deviation_within_nyquist = true;
  /// Laplacian supports are widened by support_growth, at most this many
  /// times, while the explicit central weight is not negative.
  int laplacian_support_steps = 10;
  double support_growth = 1.1;
  /// Largest angle of a gradient sample from the derivative axis (sector only).
  double gradient_max_angle = 1.1071487177940904;  // atan(2)
};

/// Wavenumbers the optimizer checks, for node spacing `s`.
///
/// Laplacians use a polar grid of radial_samples x angular_samples points
/// with radii in (0, k_Ny] over the quarter disk. Gradients use either the
/// uniform square grid with the along-axis component strictly positive, or
/// the polar grid restricted to gradient_max_angle from the derivative axis.
/// Points are returned as (k_x, k_y).
std::vector<Vec2> optimizer_sample_grid(OperatorKind kind, double s,
                                        const OptimizerSettings &settings = {});

struct OptimizedNode {
  CompactStencil stencil;
  LocalWeights weights;
  int iterations = 0;
  bool fallback = false;
};

/// Resolving-power maximisation for a gradient operator at node i.
///
/// Starting from a_along = a_initial, decrements by a_step while every sample
/// keeps Re{k_eff}/k_along <= excitation_bound; a_across is re-solved each
/// step so that the off-centre coefficients sum to exactly the bound (or is
/// held at a_min). The last admissible parameters are returned. If the first
/// candidate already fails, or a local solve fails, the explicit scheme is
/// returned with `fallback` set.
OptimizedNode optimize_gradient_coeffs(int i, const NodeSet &nodes, const SchemeSpec &scheme,
                                       OperatorKind kind, const OptimizerSettings &settings = {});

/// Same loop for the Laplacian with a single parameter a = a_x = a_y.
OptimizedNode optimize_laplacian_coeffs(int i, const NodeSet &nodes, const SchemeSpec &scheme,
                                        const OptimizerSettings &settings = {});

/// Per-node weights and implicit stencils of one operator over a node set.
struct DiscreteOperator {
  OperatorKind kind = OperatorKind::ddx;
  SchemeSpec scheme;
  NodeSet nodes;  // carries the neighbor lists the weights refer to
  std::vector<CompactStencil> stencils;
  std::vector<LocalWeights> weights;  // node < 0 for Dirichlet nodes
  std::vector<int> iterations;
  std::vector<char> fallback;
  int fallback_count = 0;
  int widened_count = 0;  // nodes whose support was enlarged

  bool has_weights(int i) const { return weights[i].node >= 0; }
};

/// Builds neighbor lists at the scheme's h/s and computes weights (and, for
/// compact schemes, optimised implicit stencils) at every non-Dirichlet node.
/// For Laplacians, nodes whose explicit central weight is not negative (or
/// whose moments matrix is too ill-conditioned) get a wider support first.
DiscreteOperator build_operator(const NodeSet &nodes, const SchemeSpec &scheme, OperatorKind kind,
                                const OptimizerSettings &settings = {});

/// Optimizer trace: `i,kind,a_x,a_y,iterations,fallback_flag`.
void write_optimizer_trace_csv(std::ostream &out, const DiscreteOperator &op);

} // namespace clabfm
