#pragma once

#include "clabfm/geometry.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace clabfm {

/// The derivative operators LABFM weights are built for.
enum class OperatorKind { ddx, ddy, laplacian };

std::string to_string(OperatorKind kind);
OperatorKind parse_operator_kind(std::string_view text);

/// Polynomial consistency order m and the matching 2D basis size p = (m^2 + 3m) / 2.
struct ConsistencySpec {
  int m = 2;
  int p() const { return (m * m + 3 * m) / 2; }
};

inline int basis_size(int m) { return ConsistencySpec{m}.p(); }

/// Exponents (px, py) of the basis slot x^px y^py / (px! py!).
struct MonomialSlot {
  int px = 0;
  int py = 0;
  int degree() const { return px + py; }
};

/// Graded ordering: degree 1..m, x-power descending within a degree, i.e.
/// [x, y, x^2/2, xy, y^2/2, x^3/6, x^2 y/2, x y^2/2, y^3/6, ...].
std::vector<MonomialSlot> monomial_slots(int m);

/// Probabilists' Hermite polynomial He_n(x).
double hermite_he(int n, double x);

/// Wendland C2 kernel in q = r/h with support q < 2, scaled so that W(0) = 1.
double wendland_c2(double q);

/// Monomial vector X evaluated at the raw offset (dx, dy).
///
/// `h` is not used to scale X itself; nondimensionalisation happens through
/// the row scaling of the moments matrix.
Eigen::VectorXd monomial_vector(double dx, double dy, double h, int m);

/// ABF vector W: slot (a, b) holds He_a(dx/h) He_b(dy/h) W(|r|/h).
///
/// The slot bijection pairs each monomial x^a y^b with the Hermite product of
/// the same exponents. Identically zero for |r| >= 2h.
Eigen::VectorXd abf_vector(double dx, double dy, double h, int m);

/// The operator applied analytically to every monomial slot, evaluated at (dx, dy).
Eigen::VectorXd operator_on_monomials(OperatorKind kind, double dx, double dy, int m);

/// Unit entries on the derivative slots named by the operator.
Eigen::VectorXd rhs_vector_explicit(OperatorKind kind, int m);

/// Moments matrix with its preconditioned LU factorisation.
///
/// Row a is scaled by h^-deg(a), then each column by the inverse of its largest
/// magnitude. Solves go through the scaled system and unwind both scalings.
struct MomentsMatrix {
  Eigen::MatrixXd raw;
  Eigen::VectorXd row_scale;
  Eigen::VectorXd col_scale;
  Eigen::MatrixXd scaled;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  double condition_estimate = 0.0;

  int size() const { return static_cast<int>(raw.rows()); }
};

inline constexpr double kMaxMomentCondition = 1e14;
inline constexpr double kLocalResidualTolerance = 1e-10;

/// Everything local to node i that does not depend on the implicit coefficients.
struct LocalSystem {
  int node = -1;
  int m = 2;
  double h = 0.0;
  std::vector<int> neighbors;
  std::vector<Vec2> offsets;  // r_ji, min-image
  Eigen::MatrixXd monomials;  // |N_i| x p, row j holds X_ji
  Eigen::MatrixXd abfs;       // |N_i| x p, row j holds W_ji
  MomentsMatrix moments;

  int basis() const { return static_cast<int>(abfs.cols()); }
  int stencil_size() const { return static_cast<int>(neighbors.size()); }
};

/// Builds M_i = sum_j X_ji (x) W_ji over the neighbors of node i.
///
/// Throws StencilError if |N_i| <= p or the condition estimate exceeds 1e14.
MomentsMatrix moments_matrix(int i, const NodeSet &nodes, int m);
LocalSystem make_local_system(int i, const NodeSet &nodes, int m);

struct LocalWeights {
  int node = -1;
  OperatorKind kind = OperatorKind::ddx;
  Eigen::VectorXd weights;  // w_ji, aligned with the node's neighbor list
  Eigen::VectorXd psi;
};

/// Implicit (left-hand side) stencil of node i with its coefficients.
struct CompactStencil {
  int node = -1;
  OperatorKind kind = OperatorKind::ddx;
  std::vector<int> members;   // always starts with the node itself
  std::vector<double> alpha;  // aligned with members
  double a_x = 0.0;
  double a_y = 0.0;

  int size() const { return static_cast<int>(members.size()); }
  bool is_explicit() const { return members.size() == 1; }
  static CompactStencil explicit_at(int node, OperatorKind kind);
};

/// C~ = sum_q alpha_q L(X_qi). Equals rhs_vector_explicit when alpha is a Kronecker delta.
Eigen::VectorXd rhs_vector_compact(const NodeSet &nodes, const CompactStencil &stencil,
                                   OperatorKind kind, int m);

/// Solves M Psi = C and forms w_ji = W_ji . Psi.
///
/// Throws SolveError naming the node if the preconditioned residual exceeds
/// 1e-10 relative to C.
LocalWeights solve_weights(const LocalSystem &system, const Eigen::VectorXd &rhs,
                           OperatorKind kind);

/// Solves the preconditioned local system for Psi without forming weights.
Eigen::VectorXd solve_moments(const LocalSystem &system, const Eigen::VectorXd &rhs);

/// Explicit LABFM weights at node i (nodes must carry neighbor lists).
LocalWeights explicit_weights(const NodeSet &nodes, int i, OperatorKind kind, int m);

/// Debug dump: `i,j,kind,w` for every nonzero weight.
void write_weights_csv(std::ostream &out, const NodeSet &nodes,
                       const std::vector<LocalWeights> &weights);

} // namespace clabfm
