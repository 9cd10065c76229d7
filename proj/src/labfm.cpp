#include "clabfm/labfm.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"

#include <cmath>
#include <ostream>

namespace clabfm {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

/// x^a y^b / (a! b!), with the empty monomial equal to one.
double scaled_monomial(int a, int b, double x, double y) {
  return ipow(x, a) * ipow(y, b) / (factorial(a) * factorial(b));
}

} // namespace

std::string to_string(OperatorKind kind) {
  switch (kind) {
  case OperatorKind::ddx: return "ddx";
  case OperatorKind::ddy: return "ddy";
  case OperatorKind::laplacian: return "laplacian";
  }
  return "?";
}

OperatorKind parse_operator_kind(std::string_view text) {
  if (text == "ddx") return OperatorKind::ddx;
  if (text == "ddy") return OperatorKind::ddy;
  if (text == "laplacian") return OperatorKind::laplacian;
  throw ConfigError("unknown operator kind `" + std::string(text) + "` (ddx|ddy|laplacian)");
}

std::vector<MonomialSlot> monomial_slots(int m) {
  std::vector<MonomialSlot> slots;
  slots.reserve(basis_size(m));
  for (int d = 1; d <= m; ++d)
    for (int a = d; a >= 0; --a) slots.push_back({a, d - a});
  return slots;
}

double hermite_he(int n, double x) {
  if (n == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double wendland_c2(double q) {
  if (q >= 2.0) return 0.0;
  const double t = 1.0 - 0.5 * q;
  return t * t * t * t * (2.0 * q + 1.0);
}

Eigen::VectorXd monomial_vector(double dx, double dy, double /*h*/, int m) {
  const auto slots = monomial_slots(m);
  Eigen::VectorXd out(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k)
    out[k] = scaled_monomial(slots[k].px, slots[k].py, dx, dy);
  return out;
}

Eigen::VectorXd abf_vector(double dx, double dy, double h, int m) {
  const auto slots = monomial_slots(m);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(slots.size());
  const double u = dx / h, v = dy / h;
  const double kernel = wendland_c2(std::sqrt(u * u + v * v));
  if (kernel == 0.0) return out;
  for (std::size_t k = 0; k < slots.size(); ++k)
    out[k] = hermite_he(slots[k].px, u) * hermite_he(slots[k].py, v) * kernel;
  return out;
}

Eigen::VectorXd operator_on_monomials(OperatorKind kind, double dx, double dy, int m) {
  const auto slots = monomial_slots(m);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(slots.size());
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const int a = slots[k].px, b = slots[k].py;
    switch (kind) {
    case OperatorKind::ddx:
      if (a >= 1) out[k] = scaled_monomial(a - 1, b, dx, dy);
      break;
    case OperatorKind::ddy:
      if (b >= 1) out[k] = scaled_monomial(a, b - 1, dx, dy);
      break;
    case OperatorKind::laplacian: {
      double v = 0.0;
      if (a >= 2) v += scaled_monomial(a - 2, b, dx, dy);
      if (b >= 2) v += scaled_monomial(a, b - 2, dx, dy);
      out[k] = v;
      break;
    }
    }
  }
  return out;
}

Eigen::VectorXd rhs_vector_explicit(OperatorKind kind, int m) {
  return operator_on_monomials(kind, 0.0, 0.0, m);
}

MomentsMatrix moments_matrix(int i, const NodeSet &nodes, int m) {
  return make_local_system(i, nodes, m).moments;
}

LocalSystem make_local_system(int i, const NodeSet &nodes, int m) {
  if (!nodes.has_neighbors()) throw ConfigError("moments_matrix: node set has no neighbor lists");
  LocalSystem sys;
  sys.node = i;
  sys.m = m;
  sys.h = nodes.support[i];
  sys.neighbors = nodes.neighbors[i];
  const int n = sys.stencil_size();
  const int p = basis_size(m);
  if (n <= p)
    throw StencilError(i, "stencil has " + std::to_string(n) + " neighbors, need more than " +
                              std::to_string(p));

  sys.offsets.resize(n);
  sys.monomials.resize(n, p);
  sys.abfs.resize(n, p);
  for (int k = 0; k < n; ++k) {
    const Vec2 d = nodes.offset(i, sys.neighbors[k]);
    sys.offsets[k] = d;
    sys.monomials.row(k) = monomial_vector(d.x, d.y, sys.h, m).transpose();
    sys.abfs.row(k) = abf_vector(d.x, d.y, sys.h, m).transpose();
  }

  MomentsMatrix &mm = sys.moments;
  mm.raw = sys.monomials.transpose() * sys.abfs;
  if (!mm.raw.allFinite()) throw StencilError(i, "moments matrix has non-finite entries");

  const auto slots = monomial_slots(m);
  mm.row_scale.resize(p);
  for (int a = 0; a < p; ++a) mm.row_scale[a] = std::pow(sys.h, -slots[a].degree());
  mm.scaled = mm.row_scale.asDiagonal() * mm.raw;
  mm.col_scale.resize(p);
  for (int b = 0; b < p; ++b) {
    const double mx = mm.scaled.col(b).cwiseAbs().maxCoeff();
    if (mx == 0.0) throw StencilError(i, "moments matrix has an empty column");
    mm.col_scale[b] = 1.0 / mx;
  }
  mm.scaled = mm.scaled * mm.col_scale.asDiagonal();
  mm.lu.compute(mm.scaled);
  const double rcond = mm.lu.rcond();
  mm.condition_estimate = rcond > 0.0 ? 1.0 / rcond : INFINITY;
  if (!(mm.condition_estimate <= kMaxMomentCondition))
    throw StencilError(i, "ill-conditioned moments matrix (condition estimate " +
                              format_double(mm.condition_estimate) + ")");
  return sys;
}

CompactStencil CompactStencil::explicit_at(int node, OperatorKind kind) {
  CompactStencil s;
  s.node = node;
  s.kind = kind;
  s.members = {node};
  s.alpha = {1.0};
  return s;
}

Eigen::VectorXd rhs_vector_compact(const NodeSet &nodes, const CompactStencil &stencil,
                                   OperatorKind kind, int m) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_size(m));
  for (int k = 0; k < stencil.size(); ++k) {
    const Vec2 d = nodes.offset(stencil.node, stencil.members[k]);
    c += stencil.alpha[k] * operator_on_monomials(kind, d.x, d.y, m);
  }
  return c;
}

Eigen::VectorXd solve_moments(const LocalSystem &system, const Eigen::VectorXd &rhs) {
  const MomentsMatrix &mm = system.moments;
  const Eigen::VectorXd b = mm.row_scale.cwiseProduct(rhs);
  const double bnorm = b.cwiseAbs().maxCoeff();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());

  Eigen::VectorXd y = mm.lu.solve(b);
  double res = (mm.scaled * y - b).cwiseAbs().maxCoeff();
  if (!(res <= kLocalResidualTolerance * bnorm)) {
    // one step of iterative refinement
    y += mm.lu.solve(b - mm.scaled * y);
    res = (mm.scaled * y - b).cwiseAbs().maxCoeff();
  }
  if (!(res <= kLocalResidualTolerance * bnorm))
    throw SolveError("node " + std::to_string(system.node) +
                         ": local weight solve residual too large",
                     res / bnorm);
  return mm.col_scale.cwiseProduct(y);
}

LocalWeights solve_weights(const LocalSystem &system, const Eigen::VectorXd &rhs,
                           OperatorKind kind) {
  LocalWeights w;
  w.node = system.node;
  w.kind = kind;
  w.psi = solve_moments(system, rhs);
  w.weights = system.abfs * w.psi;
  return w;
}

LocalWeights explicit_weights(const NodeSet &nodes, int i, OperatorKind kind, int m) {
  return solve_weights(make_local_system(i, nodes, m), rhs_vector_explicit(kind, m), kind);
}

void write_weights_csv(std::ostream &out, const NodeSet &nodes,
                       const std::vector<LocalWeights> &weights) {
  out << "i,j,kind,w\n";
  for (const auto &lw : weights) {
    if (lw.node < 0) continue;
    const auto &nbrs = nodes.neighbors[lw.node];
    for (int k = 0; k < lw.weights.size(); ++k) {
      if (lw.weights[k] == 0.0) continue;
      out << lw.node << ',' << nbrs[k] << ',' << to_string(lw.kind) << ','
          << format_double(lw.weights[k]) << '\n';
    }
  }
}

} // namespace clabfm
