#include "clabfm/geometry.hpp"

#include "clabfm/errors.hpp"
#include "clabfm/io.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace clabfm {

namespace {

constexpr double kPi = std::numbers::pi;

// Front parameters (see generate_nodes).
constexpr int kFrontCandidates = 6;
constexpr double kRejectFactor = 0.7;
constexpr double kAngleJitter = 0.15;
constexpr double kRadiusJitter = 0.05;
constexpr double kExclusionMargin = 0.5;

// Shifting parameters.
constexpr int kShiftIterations = 10;
constexpr double kShiftCutoff = 2.0;
constexpr double kShiftGain = 0.1;
constexpr double kShiftMaxStep = 0.1;

constexpr int kMinNodes = 100;

/// Uniform bucket grid over the domain rectangle; periodic-aware range queries.
class CellGrid {
public:
  CellGrid(const DomainSpec &domain, double cell)
      : domain_(domain),
        nx_(std::max(1, static_cast<int>(domain.width() / cell))),
        ny_(std::max(1, static_cast<int>(domain.height() / cell))),
        cw_(domain.width() / nx_), ch_(domain.height() / ny_),
        cells_(static_cast<std::size_t>(nx_) * ny_) {}

  void insert(int id, Vec2 p) { cells_[cell_of(p)].push_back(id); }

  void clear() {
    for (auto &c : cells_) c.clear();
  }

  /// Calls f(id) for every stored id whose cell may lie within `radius` of p.
  template <typename F> void visit(Vec2 p, double radius, F &&f) const {
    const int cx = std::clamp(static_cast<int>((p.x - domain_.x_min) / cw_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y - domain_.y_min) / ch_), 0, ny_ - 1);
    const int rx = static_cast<int>(std::ceil(radius / cw_));
    const int ry = static_cast<int>(std::ceil(radius / ch_));
    auto [x0, x1] = span(cx, rx, nx_, domain_.periodic_x);
    auto [y0, y1] = span(cy, ry, ny_, domain_.periodic_y);
    for (int gy = y0; gy <= y1; ++gy) {
      const int wy = wrap_index(gy, ny_);
      for (int gx = x0; gx <= x1; ++gx) {
        const int wx = wrap_index(gx, nx_);
        for (int id : cells_[static_cast<std::size_t>(wy) * nx_ + wx]) f(id);
      }
    }
  }

private:
  static std::pair<int, int> span(int c, int r, int n, bool periodic) {
    if (periodic) {
      if (2 * r + 1 >= n) return {0, n - 1};
      return {c - r, c + r};
    }
    return {std::max(0, c - r), std::min(n - 1, c + r)};
  }
  static int wrap_index(int g, int n) { return ((g % n) + n) % n; }

  std::size_t cell_of(Vec2 p) const {
    const int cx = std::clamp(static_cast<int>((p.x - domain_.x_min) / cw_), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>((p.y - domain_.y_min) / ch_), 0, ny_ - 1);
    return static_cast<std::size_t>(cy) * nx_ + cx;
  }

  const DomainSpec &domain_;
  int nx_, ny_;
  double cw_, ch_;
  std::vector<std::vector<int>> cells_;
};

double wrap_coordinate(double v, double lo, double hi) {
  const double len = hi - lo;
  double r = std::fmod(v - lo, len);
  if (r < 0.0) r += len;
  if (r >= len) r = 0.0;
  return lo + r;
}

} // namespace

void DomainSpec::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min))
    throw ConfigError("domain: require x_max > x_min and y_max > y_min");
  for (const auto &d : exclusions) {
    if (!(d.radius > 0.0)) throw ConfigError("domain: exclusion radius must be positive");
    if (d.center.x - d.radius <= x_min || d.center.x + d.radius >= x_max ||
        d.center.y - d.radius <= y_min || d.center.y + d.radius >= y_max)
      throw ConfigError("domain: exclusion disk must lie strictly inside the rectangle");
  }
}

double DomainSpec::accessible_area() const {
  double a = width() * height();
  for (const auto &d : exclusions) a -= kPi * d.radius * d.radius;
  return a;
}

Vec2 DomainSpec::min_image(Vec2 from, Vec2 to) const {
  Vec2 d = to - from;
  if (periodic_x) {
    const double w = width();
    d.x -= w * std::round(d.x / w);
  }
  if (periodic_y) {
    const double h = height();
    d.y -= h * std::round(d.y / h);
  }
  return d;
}

Vec2 DomainSpec::wrap(Vec2 p) const {
  if (periodic_x) p.x = wrap_coordinate(p.x, x_min, x_max);
  if (periodic_y) p.y = wrap_coordinate(p.y, y_min, y_max);
  return p;
}

bool DomainSpec::inside_rectangle(Vec2 p) const {
  return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
}

bool DomainSpec::inside_exclusion(Vec2 p, double margin) const {
  for (const auto &d : exclusions)
    if (norm(min_image(d.center, p)) < d.radius + margin) return true;
  return false;
}

DomainSpec DomainSpec::unit_periodic_square() {
  DomainSpec d;
  d.periodic_x = d.periodic_y = true;
  return d;
}

DomainSpec DomainSpec::punctured_square() {
  DomainSpec d = unit_periodic_square();
  d.exclusions.push_back({{0.5, 0.5}, 0.1});
  return d;
}

double NodeSet::mean_spacing() const {
  if (spacing.empty()) return 0.0;
  double acc = 0.0;
  for (double s : spacing) acc += s;
  return acc / static_cast<double>(spacing.size());
}

NodeSet generate_nodes(const DomainSpec &domain, double s, std::uint64_t seed) {
  domain.validate();
  if (!(s > 0.0)) throw ConfigError("generate_nodes: spacing must be positive");
  const double expected = domain.accessible_area() / (s * s);
  if (expected < kMinNodes)
    throw ConfigError("generate_nodes: spacing " + std::to_string(s) +
                      " too coarse (expected " + std::to_string(static_cast<int>(expected)) +
                      " nodes, need at least 100)");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  std::vector<Vec2> pos;
  std::vector<BoundaryTag> tags;
  std::vector<char> fixed;
  const double reject = kRejectFactor * s;
  CellGrid grid(domain, reject);

  auto too_close = [&](Vec2 p) {
    bool close = false;
    grid.visit(p, reject, [&](int j) {
      if (!close && norm(domain.min_image(pos[j], p)) < reject) close = true;
    });
    return close;
  };
  auto push = [&](Vec2 p, BoundaryTag tag, bool is_fixed) {
    grid.insert(static_cast<int>(pos.size()), p);
    pos.push_back(p);
    tags.push_back(tag);
    fixed.push_back(is_fixed ? 1 : 0);
  };

  // Boundary-conforming seeds: exclusion rims, then non-periodic edges.
  for (const auto &d : domain.exclusions) {
    const int n = std::max(6, static_cast<int>(std::lround(2.0 * kPi * d.radius / s)));
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * kPi * k / n;
      push({d.center.x + d.radius * std::cos(t), d.center.y + d.radius * std::sin(t)},
           BoundaryTag::dirichlet_boundary, true);
    }
  }
  auto seed_edge = [&](Vec2 a, Vec2 b, bool closed) {
    const int n = std::max(1, static_cast<int>(std::lround(norm(b - a) / s)));
    const int last = closed ? n : n - 1;
    for (int k = 0; k <= last; ++k) {
      const double t = static_cast<double>(k) / n;
      const Vec2 p = a + t * (b - a);
      if (!too_close(p)) push(p, BoundaryTag::interior, true);
    }
  };
  if (!domain.periodic_x) {
    seed_edge({domain.x_min, domain.y_min}, {domain.x_min, domain.y_max}, !domain.periodic_y);
    seed_edge({domain.x_max, domain.y_min}, {domain.x_max, domain.y_max}, !domain.periodic_y);
  }
  if (!domain.periodic_y) {
    seed_edge({domain.x_min, domain.y_min}, {domain.x_max, domain.y_min}, !domain.periodic_x);
    seed_edge({domain.x_min, domain.y_max}, {domain.x_max, domain.y_max}, !domain.periodic_x);
  }
  if (pos.empty()) {
    Vec2 p{uniform(domain.x_min, domain.x_max), uniform(domain.y_min, domain.y_max)};
    while (domain.inside_exclusion(p, kExclusionMargin * s))
      p = {uniform(domain.x_min, domain.x_max), uniform(domain.y_min, domain.y_max)};
    push(p, BoundaryTag::interior, false);
  }

  // Propagating front: each front node spawns jittered candidates one spacing away.
  std::deque<int> front;
  for (int i = 0; i < static_cast<int>(pos.size()); ++i) front.push_back(i);
  while (!front.empty()) {
    const int i = front.front();
    front.pop_front();
    const double phase = uniform(0.0, 2.0 * kPi);
    for (int c = 0; c < kFrontCandidates; ++c) {
      const double t = phase + 2.0 * kPi * c / kFrontCandidates +
                       uniform(-kAngleJitter, kAngleJitter);
      const double r = s * (1.0 + uniform(-kRadiusJitter, kRadiusJitter));
      Vec2 p = domain.wrap({pos[i].x + r * std::cos(t), pos[i].y + r * std::sin(t)});
      if (!domain.inside_rectangle(p)) continue;
      if (domain.inside_exclusion(p, kExclusionMargin * s)) continue;
      if (too_close(p)) continue;
      push(p, BoundaryTag::interior, false);
      front.push_back(static_cast<int>(pos.size()) - 1);
    }
  }

  // Shifting: repulsion (s/r)^2 from nodes within the cutoff, step capped at 0.1 s.
  const int n = static_cast<int>(pos.size());
  const double cutoff = kShiftCutoff * s;
  CellGrid shift_grid(domain, cutoff);
  std::vector<Vec2> step(n);
  for (int it = 0; it < kShiftIterations; ++it) {
    shift_grid.clear();
    for (int i = 0; i < n; ++i) shift_grid.insert(i, pos[i]);
    for (int i = 0; i < n; ++i) {
      step[i] = {};
      if (fixed[i]) continue;
      Vec2 force{};
      shift_grid.visit(pos[i], cutoff, [&](int j) {
        if (j == i) return;
        const Vec2 d = domain.min_image(pos[i], pos[j]);
        const double r = norm(d);
        if (r >= cutoff || r == 0.0) return;
        const double mag = (s * s) / (r * r);
        force = force - (mag / r) * d;
      });
      Vec2 dx = (kShiftGain * s) * force;
      const double len = norm(dx);
      if (len > kShiftMaxStep * s) dx = (kShiftMaxStep * s / len) * dx;
      step[i] = dx;
    }
    for (int i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      Vec2 p = domain.wrap(pos[i] + step[i]);
      p.x = std::clamp(p.x, domain.x_min, domain.x_max);
      p.y = std::clamp(p.y, domain.y_min, domain.y_max);
      for (const auto &d : domain.exclusions) {
        const Vec2 rel = domain.min_image(d.center, p);
        const double r = norm(rel);
        const double rmin = d.radius + kExclusionMargin * s;
        if (r < rmin && r > 0.0) p = domain.wrap(d.center + (rmin / r) * rel);
      }
      pos[i] = p;
    }
  }

  NodeSet out;
  out.domain = domain;
  out.positions = std::move(pos);
  out.tags = std::move(tags);
  out.rng_seed = seed;
  const double si = std::sqrt(domain.accessible_area() / out.size());
  out.spacing.assign(out.size(), si);
  out.support.assign(out.size(), 0.0);
  return out;
}

NodeSet build_neighbors(const NodeSet &nodes, double h_over_s, int basis_size) {
  if (!(h_over_s > 1.0)) throw ConfigError("build_neighbors: h/s must exceed 1");
  NodeSet out = nodes;
  const int n = out.size();
  out.support.resize(n);
  double hmax = 0.0;
  for (int i = 0; i < n; ++i) {
    out.support[i] = h_over_s * out.spacing[i];
    hmax = std::max(hmax, out.support[i]);
  }
  const double reach = 2.0 * hmax;
  const auto &dom = out.domain;
  if ((dom.periodic_x && 2.0 * reach >= dom.width()) ||
      (dom.periodic_y && 2.0 * reach >= dom.height()))
    throw ConfigError("build_neighbors: stencil diameter exceeds the periodic domain");

  CellGrid grid(dom, reach);
  for (int i = 0; i < n; ++i) grid.insert(i, out.positions[i]);
  out.neighbors.assign(n, {});
  for (int i = 0; i < n; ++i) {
    const double r2 = 4.0 * out.support[i] * out.support[i];
    auto &list = out.neighbors[i];
    grid.visit(out.positions[i], reach, [&](int j) {
      if (j != i && norm2(out.offset(i, j)) <= r2) list.push_back(j);
    });
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  for (int i = 0; i < n; ++i) {
    if (out.is_dirichlet(i)) continue;
    if (static_cast<int>(out.neighbors[i].size()) <= basis_size)
      throw StencilError(i, "stencil has " + std::to_string(out.neighbors[i].size()) +
                                " neighbors, need more than " + std::to_string(basis_size));
  }
  return out;
}

void set_support(NodeSet &nodes, int i, double h) {
  if (!(h > 0.0)) throw ConfigError("set_support: h must be positive");
  const auto &dom = nodes.domain;
  if ((dom.periodic_x && 4.0 * h >= dom.width()) || (dom.periodic_y && 4.0 * h >= dom.height()))
    throw ConfigError("set_support: stencil diameter exceeds the periodic domain");
  nodes.support[i] = h;
  auto &list = nodes.neighbors[i];
  list.clear();
  const double r2 = 4.0 * h * h;
  for (int j = 0; j < nodes.size(); ++j)
    if (j != i && norm2(nodes.offset(i, j)) <= r2) list.push_back(j);
}

double min_separation(const NodeSet &nodes) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < nodes.size(); ++i)
    for (int j = i + 1; j < nodes.size(); ++j) best = std::min(best, norm(nodes.offset(i, j)));
  return best;
}

std::string to_string(BoundaryTag tag) {
  return tag == BoundaryTag::interior ? "interior" : "dirichlet_boundary";
}

void write_nodes_csv(std::ostream &out, const NodeSet &nodes) {
  out << "id,x,y,s,h,tag\n";
  for (int i = 0; i < nodes.size(); ++i) {
    out << i << ',' << format_double(nodes.positions[i].x) << ','
        << format_double(nodes.positions[i].y) << ',' << format_double(nodes.spacing[i]) << ','
        << format_double(nodes.support[i]) << ',' << to_string(nodes.tags[i]) << '\n';
  }
}

void write_nodes_csv(const std::string &path, const NodeSet &nodes) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  write_nodes_csv(f, nodes);
}

NodeSet read_nodes_csv(std::istream &in, const DomainSpec &domain) {
  NodeSet out;
  out.domain = domain;
  std::string line;
  if (!std::getline(in, line) || line != "id,x,y,s,h,tag")
    throw ConfigError("node csv: missing header `id,x,y,s,h,tag`");
  int expected_id = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6) throw ConfigError("node csv: expected 6 fields in `" + line + "`");
    if (std::stoi(fields[0]) != expected_id++)
      throw ConfigError("node csv: ids must be consecutive from 0");
    out.positions.push_back({parse_double(fields[1]), parse_double(fields[2])});
    out.spacing.push_back(parse_double(fields[3]));
    out.support.push_back(parse_double(fields[4]));
    if (fields[5] == "interior")
      out.tags.push_back(BoundaryTag::interior);
    else if (fields[5] == "dirichlet_boundary")
      out.tags.push_back(BoundaryTag::dirichlet_boundary);
    else
      throw ConfigError("node csv: unknown tag `" + fields[5] + "`");
  }
  return out;
}

NodeSet read_nodes_csv(const std::string &path, const DomainSpec &domain) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open " + path);
  return read_nodes_csv(f, domain);
}

} // namespace clabfm
