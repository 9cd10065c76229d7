#include "clabfm/compact.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <ostream>
#include <tuple>

namespace clabfm {

namespace {

constexpr double kPi = std::numbers::pi;

const std::array<SchemeSpec, 8> kSchemes = {{
    {'a', 2, SchemeMode::explicit_scheme, 1},
    {'b', 2, SchemeMode::compact_scheme, 3},
    {'c', 2, SchemeMode::compact_scheme, 5},
    {'d', 2, SchemeMode::compact_scheme, 7},
    {'e', 4, SchemeMode::explicit_scheme, 1},
    {'f', 4, SchemeMode::compact_scheme, 5},
    {'g', 4, SchemeMode::compact_scheme, 7},
    {'h', 4, SchemeMode::compact_scheme, 9},
}};

bool is_gradient(OperatorKind kind) { return kind != OperatorKind::laplacian; }

double alpha_value(Vec2 d, double a_x, double a_y, double s) {
  return std::exp(-(a_x * a_x * d.x * d.x + a_y * a_y * d.y * d.y) / (s * s));
}

/// Off-centre coefficient sum in member order (the node itself is skipped).
double off_centre_sum(const std::vector<double> &alpha) {
  double sum = 0.0;
  for (std::size_t q = 1; q < alpha.size(); ++q) sum += alpha[q];
  return sum;
}

/// Precomputed spectral response of node i for any alpha.
///
/// Weights are linear in alpha: w = W M^-1 L alpha = G alpha, so every
/// trigonometric sum over neighbors collapses into a K x Q table once.
class ResponseTables {
public:
  ResponseTables(const LocalSystem &sys, const NodeSet &nodes, const std::vector<int> &members,
                 OperatorKind kind, const std::vector<Vec2> &samples, double k_ny = 0.0)
      : kind_(kind) {
    const int n = sys.stencil_size();
    const int q = static_cast<int>(members.size());
    const int p = sys.basis();
    const int k = static_cast<int>(samples.size());

    Eigen::MatrixXd ops(p, q);
    Eigen::MatrixXd rq(2, q);
    for (int c = 0; c < q; ++c) {
      const Vec2 d = nodes.offset(sys.node, members[c]);
      ops.col(c) = operator_on_monomials(kind, d.x, d.y, sys.m);
      rq(0, c) = d.x;
      rq(1, c) = d.y;
    }
    Eigen::MatrixXd psi(p, q);
    for (int c = 0; c < q; ++c) psi.col(c) = solve_moments(sys, ops.col(c));
    const Eigen::MatrixXd g = sys.abfs * psi;

    Eigen::MatrixXd kk(k, 2);
    target_.resize(k);
    counted_.assign(k, 1);
    for (int r = 0; r < k; ++r) {
      kk(r, 0) = samples[r].x;
      kk(r, 1) = samples[r].y;
      if (k_ny > 0.0 && norm(samples[r]) > k_ny * (1.0 + 1e-12)) counted_[r] = 0;
      switch (kind) {
      case OperatorKind::ddx: target_[r] = samples[r].x; break;
      case OperatorKind::ddy: target_[r] = samples[r].y; break;
      case OperatorKind::laplacian: target_[r] = norm2(samples[r]); break;
      }
    }
    Eigen::MatrixXd rj(2, n);
    for (int c = 0; c < n; ++c) {
      rj(0, c) = sys.offsets[c].x;
      rj(1, c) = sys.offsets[c].y;
    }
    const Eigen::ArrayXXd theta_j = (kk * rj).array();
    const Eigen::MatrixXd sin_j = theta_j.sin().matrix();
    const Eigen::MatrixXd omc_j = (1.0 - theta_j.cos()).matrix();
    sg_ = sin_j * g;
    cg_ = omc_j * g;
    const Eigen::ArrayXXd theta_q = (kk * rq).array();
    sq_ = theta_q.sin().matrix();
    cq_ = theta_q.cos().matrix();
  }

  /// True if every sample keeps Re{response}/target <= bound. `deviation`
  /// receives the mean of |target - Re{response}| / target over the samples
  /// inside |k| <= k_ny (all samples when k_ny is 0).
  bool admissible(const Eigen::VectorXd &alpha, double bound, double *deviation = nullptr) const {
    const Eigen::ArrayXd s_w = (sg_ * alpha).array();
    const Eigen::ArrayXd c_w = (cg_ * alpha).array();
    const Eigen::ArrayXd s_a = (sq_ * alpha).array();
    const Eigen::ArrayXd c_a = (cq_ * alpha).array();
    const Eigen::ArrayXd den = s_a.square() + c_a.square();
    Eigen::ArrayXd re;
    if (is_gradient(kind_))
      re = (s_w * c_a + c_w * s_a) / den;
    else
      re = (c_w * c_a - s_w * s_a) / den;
    double dev = 0.0;
    int counted = 0;
    for (Eigen::Index r = 0; r < re.size(); ++r) {
      if (!(den[r] > 0.0)) return false;
      if (!(re[r] <= bound * target_[r])) return false;
      if (!counted_[r]) continue;
      dev += std::abs(target_[r] - re[r]) / target_[r];
      ++counted;
    }
    if (deviation) *deviation = counted ? dev / counted : 0.0;
    return true;
  }

private:
  OperatorKind kind_;
  Eigen::VectorXd target_;
  std::vector<char> counted_;
  Eigen::MatrixXd sg_, cg_, sq_, cq_;
};

/// Exact check of a finished stencil through the public response functions.
bool verify_response(const NodeSet &nodes, const LocalWeights &w, const CompactStencil &st,
                     const std::vector<Vec2> &samples, double bound) {
  for (const Vec2 &k : samples) {
    WavenumberResponse r;
    try {
      r = effective_response(nodes, w, st, k.x, k.y);
    } catch (const NumericalError &) {
      return false;
    }
    if (!(response_ratio(st.kind, r) <= bound)) return false;
  }
  return true;
}

/// a_across such that the off-centre sum equals the bound, nudged so the
/// canonical sum does not exceed it. Returns a negative value if infeasible.
double solve_across(const std::vector<Vec2> &d, double a_along, double s, bool along_x,
                    const OptimizerSettings &st, double warm) {
  auto coeff = [&](Vec2 v, double a_across) {
    return along_x ? alpha_value(v, a_along, a_across, s) : alpha_value(v, a_across, a_along, s);
  };
  auto across2 = [&](Vec2 v) { return along_x ? v.y * v.y : v.x * v.x; };
  auto sum_at = [&](double a) {
    double sum = 0.0;
    for (std::size_t q = 1; q < d.size(); ++q) sum += coeff(d[q], a);
    return sum;
  };
  const double bound = st.coefficient_sum_bound;
  const double floor = st.across_at_least_along ? std::max(st.a_min, a_along) : st.a_min;
  if (sum_at(floor) <= bound) return floor;

  double lo = floor, hi = std::max(2.0 * st.a_min, warm > 0.0 ? warm : 1.0);
  while (sum_at(hi) > bound) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return -1.0;
  }
  double a = std::clamp(warm > 0.0 ? warm : 0.5 * (lo + hi), lo, hi);
  for (int it = 0; it < 100; ++it) {
    double f = -bound, df = 0.0;
    for (std::size_t q = 1; q < d.size(); ++q) {
      const double c = coeff(d[q], a);
      f += c;
      df -= 2.0 * a * across2(d[q]) / (s * s) * c;
    }
    if (f > 0.0)
      lo = a;
    else
      hi = a;
    if (f == 0.0 || hi - lo <= 1e-15 * hi) break;
    double next = df < 0.0 ? a - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - a) <= 1e-15 * a) {
      a = next;
      break;
    }
    a = next;
  }
  // the canonical sum must respect the bound exactly
  for (int it = 0; it < 64 && sum_at(a) > bound; ++it)
    a = it < 8 ? std::nextafter(a, INFINITY) : a * (1.0 + 1e-14 * (1 << std::min(it - 8, 40)));
  return sum_at(a) > bound ? -1.0 : a;
}

CompactStencil make_stencil(int i, OperatorKind kind, std::vector<int> members,
                            const NodeSet &nodes, double a_x, double a_y) {
  CompactStencil st;
  st.node = i;
  st.kind = kind;
  st.alpha = alpha_from_params(i, nodes, members, a_x, a_y);
  st.members = std::move(members);
  st.a_x = a_x;
  st.a_y = a_y;
  return st;
}

OptimizedNode explicit_result(const LocalSystem &sys, OperatorKind kind, bool fallback,
                              int iterations) {
  OptimizedNode out;
  out.stencil = CompactStencil::explicit_at(sys.node, kind);
  out.weights = solve_weights(sys, rhs_vector_explicit(kind, sys.m), kind);
  out.fallback = fallback;
  out.iterations = iterations;
  return out;
}

/// Shared driver: `params(step)` yields (a_x, a_y) for the step-th decrement
/// or nothing when the step is infeasible.
template <typename Params>
OptimizedNode run_optimizer(int i, const NodeSet &nodes, const SchemeSpec &scheme,
                            OperatorKind kind, const OptimizerSettings &st, Params &&params) {
  const int m = scheme.consistency(kind);
  const LocalSystem sys = make_local_system(i, nodes, m);
  if (!scheme.is_compact()) return explicit_result(sys, kind, false, 0);

  const std::vector<int> members = select_implicit_stencil(i, nodes, kind, scheme.q);
  const auto samples = optimizer_sample_grid(kind, nodes.spacing[i], st);
  const double bound = st.excitation_bound;

  std::optional<ResponseTables> tables;
  try {
    tables.emplace(sys, nodes, members, kind, samples, st.deviation_within_nyquist ? kPi / nodes.spacing[i] : 0.0);
  } catch (const NumericalError &) {
    return explicit_result(sys, kind, true, 0);
  }

  const int steps = static_cast<int>(std::lround((st.a_initial - st.a_min) / st.a_step));
  Eigen::VectorXd alpha(members.size());
  int accepted = -1;
  double last_dev = INFINITY;
  std::vector<std::pair<double, double>> history;
  for (int step = 0; step <= steps; ++step) {
    const auto ab = params(step);
    if (!ab) break;
    const auto a = alpha_from_params(i, nodes, members, ab->first, ab->second);
    for (std::size_t q = 0; q < a.size(); ++q) alpha[q] = a[q];
    double dev = 0.0;
    if (!tables->admissible(alpha, bound, &dev)) break;
    if (st.stop_when_deviation_grows && step > 0 && dev > last_dev) break;
    last_dev = dev;
    history.push_back(*ab);
    accepted = step;
  }
  if (accepted < 0) return explicit_result(sys, kind, true, 0);

  // recompute canonically; step back if rounding moved a sample over the bound
  for (int step = accepted; step >= 0; --step) {
    const auto [a_x, a_y] = history[step];
    CompactStencil stencil = make_stencil(i, kind, members, nodes, a_x, a_y);
    if (is_gradient(kind) && off_centre_sum(stencil.alpha) > st.coefficient_sum_bound) continue;
    LocalWeights w;
    try {
      w = solve_weights(sys, rhs_vector_compact(nodes, stencil, kind, m), kind);
    } catch (const NumericalError &) {
      continue;
    }
    if (!verify_response(nodes, w, stencil, samples, bound)) continue;
    OptimizedNode out;
    out.stencil = std::move(stencil);
    out.weights = std::move(w);
    out.iterations = accepted + 1;
    return out;
  }
  return explicit_result(sys, kind, true, accepted + 1);
}

/// Explicit Laplacian at node i has a negative central weight -sum_j w_ji.
bool central_weight_ok(int i, const NodeSet &nodes, int m) {
  try {
    const LocalSystem sys = make_local_system(i, nodes, m);
    const LocalWeights w = solve_weights(sys, rhs_vector_explicit(OperatorKind::laplacian, m),
                                         OperatorKind::laplacian);
    double sum = 0.0;
    for (double v : w.weights) sum += v;
    return sum > 0.0;
  } catch (const NumericalError &) {
    return false;
  }
}

double a_at(const OptimizerSettings &st, int step) {
  // computed from the step count so the decrements do not accumulate rounding
  return st.a_initial - step * st.a_step;
}

} // namespace

int SchemeSpec::consistency(OperatorKind kind) const {
  return is_gradient(kind) ? order : order + 1;
}

double SchemeSpec::h_over_s(OperatorKind kind) const {
  if (order == 2) return is_gradient(kind) ? 1.2 : 1.35;
  return is_gradient(kind) ? 1.4 : 1.7;
}

int SchemeSpec::implicit_size(OperatorKind kind) const {
  return is_gradient(kind) ? q : 2 * q - 1;
}

SchemeSpec SchemeSpec::from_label(char label) {
  for (const auto &s : kSchemes)
    if (s.label == label) return s;
  throw ConfigError(std::string("unknown scheme `") + label + "` (a..h)");
}

const std::array<SchemeSpec, 8> &SchemeSpec::all() { return kSchemes; }

std::vector<int> select_implicit_stencil(int i, const NodeSet &nodes, OperatorKind kind, int q) {
  if (!nodes.has_neighbors()) throw ConfigError("select_implicit_stencil: no neighbor lists");
  if (q < 1) throw ConfigError("implicit stencil size must be positive");
  const auto &nbrs = nodes.neighbors[i];
  if (q > static_cast<int>(nbrs.size()) + 1)
    throw StencilError(i, "implicit stencil of " + std::to_string(q) + " needs more neighbors");

  auto along = [&](bool x_line) {
    std::vector<std::tuple<double, double, int>> keys;
    keys.reserve(nbrs.size());
    for (int j : nbrs) {
      const Vec2 d = nodes.offset(i, j);
      keys.emplace_back(x_line ? std::abs(d.y) : std::abs(d.x), norm2(d), j);
    }
    std::partial_sort(keys.begin(), keys.begin() + (q - 1), keys.end());
    std::vector<int> out{i};
    for (int k = 0; k < q - 1; ++k) out.push_back(std::get<2>(keys[k]));
    return out;
  };

  switch (kind) {
  case OperatorKind::ddx: return along(true);
  case OperatorKind::ddy: return along(false);
  case OperatorKind::laplacian: {
    auto out = along(true);
    for (int j : along(false))
      if (std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
    return out;
  }
  }
  return {i};
}

std::vector<double> alpha_from_params(std::span<const Vec2> offsets, double a_x, double a_y,
                                      double s) {
  std::vector<double> out;
  out.reserve(offsets.size());
  for (const Vec2 &d : offsets) out.push_back(alpha_value(d, a_x, a_y, s));
  return out;
}

std::vector<double> alpha_from_params(int i, const NodeSet &nodes, std::span<const int> members,
                                      double a_x, double a_y) {
  std::vector<double> out;
  out.reserve(members.size());
  for (int q : members) out.push_back(alpha_value(nodes.offset(i, q), a_x, a_y, nodes.spacing[i]));
  return out;
}

namespace {

struct Sums {
  double sin_w = 0.0, omc_w = 0.0, sin_a = 0.0, cos_a = 0.0;
};

Sums fourier_sums(const NodeSet &nodes, const LocalWeights &w, const CompactStencil &st,
                  double k_x, double k_y) {
  Sums s;
  const int i = st.node;
  const auto &nbrs = nodes.neighbors[i];
  if (static_cast<Eigen::Index>(nbrs.size()) != w.weights.size())
    throw ConfigError("weights do not match the neighbor list of node " + std::to_string(i));
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const Vec2 d = nodes.offset(i, nbrs[k]);
    const double th = k_x * d.x + k_y * d.y;
    s.sin_w += std::sin(th) * w.weights[k];
    s.omc_w += (1.0 - std::cos(th)) * w.weights[k];
  }
  for (int q = 0; q < st.size(); ++q) {
    const Vec2 d = nodes.offset(i, st.members[q]);
    const double th = k_x * d.x + k_y * d.y;
    s.sin_a += std::sin(th) * st.alpha[q];
    s.cos_a += std::cos(th) * st.alpha[q];
  }
  return s;
}

} // namespace

WavenumberResponse k_eff(const NodeSet &nodes, const LocalWeights &weights,
                         const CompactStencil &stencil, double k_x, double k_y) {
  const Sums s = fourier_sums(nodes, weights, stencil, k_x, k_y);
  WavenumberResponse r;
  r.k_x = k_x;
  r.k_y = k_y;
  r.gamma1 = s.sin_w;
  r.gamma2 = s.omc_w;
  r.lambda1 = s.sin_a;
  r.lambda2 = s.cos_a;
  const double den = r.lambda1 * r.lambda1 + r.lambda2 * r.lambda2;
  if (!(den > 0.0))
    throw NumericalError("node " + std::to_string(stencil.node) + ": degenerate k_eff response");
  r.value = {(r.gamma1 * r.lambda2 + r.gamma2 * r.lambda1) / den,
             (r.gamma2 * r.lambda2 - r.gamma1 * r.lambda1) / den};
  return r;
}

WavenumberResponse q_eff2(const NodeSet &nodes, const LocalWeights &weights,
                          const CompactStencil &stencil, double k_x, double k_y) {
  const Sums s = fourier_sums(nodes, weights, stencil, k_x, k_y);
  WavenumberResponse r;
  r.k_x = k_x;
  r.k_y = k_y;
  r.gamma1 = s.omc_w;
  r.gamma2 = s.sin_w;
  r.lambda1 = s.cos_a;
  r.lambda2 = s.sin_a;
  const double den = r.lambda1 * r.lambda1 + r.lambda2 * r.lambda2;
  if (!(den > 0.0))
    throw NumericalError("node " + std::to_string(stencil.node) + ": degenerate q_eff2 response");
  // (g1 - i g2) / (l1 + i l2)
  r.value = {(r.gamma1 * r.lambda1 - r.gamma2 * r.lambda2) / den,
             -(r.gamma2 * r.lambda1 + r.gamma1 * r.lambda2) / den};
  return r;
}

WavenumberResponse effective_response(const NodeSet &nodes, const LocalWeights &weights,
                                      const CompactStencil &stencil, double k_x, double k_y) {
  return is_gradient(stencil.kind) ? k_eff(nodes, weights, stencil, k_x, k_y)
                                   : q_eff2(nodes, weights, stencil, k_x, k_y);
}

double response_ratio(OperatorKind kind, const WavenumberResponse &r) {
  switch (kind) {
  case OperatorKind::ddx: return r.value.real() / r.k_x;
  case OperatorKind::ddy: return r.value.real() / r.k_y;
  case OperatorKind::laplacian: return r.value.real() / (r.k_x * r.k_x + r.k_y * r.k_y);
  }
  return 0.0;
}

std::vector<Vec2> optimizer_sample_grid(OperatorKind kind, double s,
                                        const OptimizerSettings &settings) {
  const double k_ny = kPi / s;
  const int nr = settings.radial_samples, na = settings.angular_samples;
  if (nr < 1 || na < 1) throw ConfigError("optimizer sample counts must be positive");
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(nr) * na);
  const bool swap = kind == OperatorKind::ddy;
  auto push = [&](double along, double across) {
    out.push_back(swap ? Vec2{across, along} : Vec2{along, across});
  };

  if (kind != OperatorKind::laplacian && settings.gradient_region == SampleRegion::square) {
    for (int a = 1; a <= nr; ++a)
      for (int b = 0; b < na; ++b)
        push(k_ny * a / nr, na == 1 ? 0.0 : k_ny * b / (na - 1));
    return out;
  }
  const double max_angle =
      kind == OperatorKind::laplacian ? 0.5 * kPi : settings.gradient_max_angle;
  for (int a = 1; a <= nr; ++a) {
    const double q = k_ny * a / nr;
    for (int b = 0; b < na; ++b) {
      const double th = na == 1 ? 0.0 : max_angle * b / (na - 1);
      push(q * std::cos(th), q * std::sin(th));
    }
  }
  return out;
}

OptimizedNode optimize_gradient_coeffs(int i, const NodeSet &nodes, const SchemeSpec &scheme,
                                       OperatorKind kind, const OptimizerSettings &settings) {
  if (!is_gradient(kind)) throw ConfigError("optimize_gradient_coeffs: gradient kind required");
  const bool along_x = kind == OperatorKind::ddx;
  std::vector<Vec2> offsets;
  if (scheme.is_compact()) {
    for (int q : select_implicit_stencil(i, nodes, kind, scheme.q))
      offsets.push_back(nodes.offset(i, q));
  }
  double warm = -1.0;
  auto params = [&](int step) -> std::optional<std::pair<double, double>> {
    const double a = a_at(settings, step);
    const double across = solve_across(offsets, a, nodes.spacing[i], along_x, settings, warm);
    if (across < 0.0) return std::nullopt;
    warm = across;
    return along_x ? std::pair{a, across} : std::pair{across, a};
  };
  return run_optimizer(i, nodes, scheme, kind, settings, params);
}

OptimizedNode optimize_laplacian_coeffs(int i, const NodeSet &nodes, const SchemeSpec &scheme,
                                        const OptimizerSettings &settings) {
  std::vector<int> members;
  if (scheme.is_compact() && settings.laplacian_sum_guard)
    members = select_implicit_stencil(i, nodes, OperatorKind::laplacian, scheme.q);
  auto params = [&](int step) -> std::optional<std::pair<double, double>> {
    const double a = a_at(settings, step);
    if (!members.empty() &&
        off_centre_sum(alpha_from_params(i, nodes, members, a, a)) > settings.coefficient_sum_bound)
      return std::nullopt;
    return std::pair{a, a};
  };
  return run_optimizer(i, nodes, scheme, OperatorKind::laplacian, settings, params);
}

DiscreteOperator build_operator(const NodeSet &nodes, const SchemeSpec &scheme, OperatorKind kind,
                                const OptimizerSettings &settings) {
  const int m = scheme.consistency(kind);
  DiscreteOperator op;
  op.kind = kind;
  op.scheme = scheme;
  op.nodes = build_neighbors(nodes, scheme.h_over_s(kind), basis_size(m));
  const int n = op.nodes.size();
  if (kind == OperatorKind::laplacian) {
    for (int i = 0; i < n; ++i) {
      if (op.nodes.is_dirichlet(i)) continue;
      const double h0 = op.nodes.support[i];
      int step = 0;
      while (!central_weight_ok(i, op.nodes, m) && step < settings.laplacian_support_steps) {
        ++step;
        set_support(op.nodes, i, h0 * std::pow(settings.support_growth, step));
      }
      if (step > 0) ++op.widened_count;
    }
  }
  op.stencils.resize(n);
  op.weights.resize(n);
  op.iterations.assign(n, 0);
  op.fallback.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    if (op.nodes.is_dirichlet(i)) {
      op.stencils[i] = CompactStencil::explicit_at(i, kind);
      continue;
    }
    OptimizedNode r = is_gradient(kind) ? optimize_gradient_coeffs(i, op.nodes, scheme, kind, settings)
                                        : optimize_laplacian_coeffs(i, op.nodes, scheme, settings);
    op.stencils[i] = std::move(r.stencil);
    op.weights[i] = std::move(r.weights);
    op.iterations[i] = r.iterations;
    op.fallback[i] = r.fallback ? 1 : 0;
    if (r.fallback) ++op.fallback_count;
  }
  return op;
}

void write_optimizer_trace_csv(std::ostream &out, const DiscreteOperator &op) {
  out << "i,kind,a_x,a_y,iterations,fallback_flag\n";
  for (int i = 0; i < op.nodes.size(); ++i) {
    if (!op.has_weights(i)) continue;
    const auto &st = op.stencils[i];
    out << i << ',' << to_string(op.kind) << ',' << format_double(st.a_x) << ','
        << format_double(st.a_y) << ',' << op.iterations[i] << ',' << int(op.fallback[i]) << '\n';
  }
}

} // namespace clabfm
