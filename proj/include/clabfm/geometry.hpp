#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace clabfm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double norm2(Vec2 v) { return v.x * v.x + v.y * v.y; }
inline double norm(Vec2 v) { return std::sqrt(norm2(v)); }

/// Disk removed from the computational domain; its rim carries Dirichlet nodes.
struct Disk {
  Vec2 center;
  double radius = 0.0;
};

struct DomainSpec {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  bool periodic_x = false;
  bool periodic_y = false;
  std::vector<Disk> exclusions;

  /// Throws ConfigError when the rectangle is empty or a disk touches its edge.
  void validate() const;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  /// Rectangle area minus the excluded disks.
  double accessible_area() const;

  /// r_to - r_from, wrapped to the nearest periodic image in periodic directions.
  Vec2 min_image(Vec2 from, Vec2 to) const;
  /// Maps a point back into [min, max) along periodic directions.
  Vec2 wrap(Vec2 p) const;
  bool inside_rectangle(Vec2 p) const;
  bool inside_exclusion(Vec2 p, double margin = 0.0) const;

  static DomainSpec unit_periodic_square();
  /// Unit periodic square with a disk of radius 0.1 removed at its center.
  static DomainSpec punctured_square();
};

/// Free-function form of DomainSpec::min_image.
inline Vec2 min_image_offset(Vec2 from, Vec2 to, const DomainSpec &domain) {
  return domain.min_image(from, to);
}

enum class BoundaryTag { interior, dirichlet_boundary };

/// Scattered nodes with per-node spacing, stencil scale and neighbor lists.
///
/// The stencil radius of node i is 2 * support[i]. Neighbor lists exclude the
/// node itself and are sorted by index. A NodeSet is a value; operations that
/// attach stencils return a new set.
struct NodeSet {
  DomainSpec domain;
  std::vector<Vec2> positions;
  std::vector<double> spacing;  // s_i
  std::vector<double> support;  // h_i
  std::vector<BoundaryTag> tags;
  std::vector<std::vector<int>> neighbors;
  std::uint64_t rng_seed = 0;

  int size() const { return static_cast<int>(positions.size()); }
  /// Min-image displacement r_j - r_i.
  Vec2 offset(int i, int j) const { return domain.min_image(positions[i], positions[j]); }
  bool is_dirichlet(int i) const { return tags[i] == BoundaryTag::dirichlet_boundary; }
  /// Global spacing estimate used for Nyquist normalisation.
  double mean_spacing() const;
  bool has_neighbors() const { return neighbors.size() == positions.size(); }
};

/// Propagating-front fill followed by exactly ten repulsive shifting sweeps.
///
/// Nodes on exclusion rims are tagged dirichlet_boundary. Throws ConfigError if
/// fewer than 100 nodes would fit at spacing `s`.
NodeSet generate_nodes(const DomainSpec &domain, double s, std::uint64_t seed);

/// Sets h_i = h_over_s * s_i and collects all j != i within 2 h_i.
///
/// Every interior node must end up with more than `basis_size` neighbors,
/// otherwise a StencilError naming the first deficient node is thrown.
NodeSet build_neighbors(const NodeSet &nodes, double h_over_s, int basis_size = 0);

/// Sets h_i = h for one node and rebuilds its neighbor list by a direct scan.
void set_support(NodeSet &nodes, int i, double h);

/// Smallest pairwise min-image distance (brute force, for diagnostics and tests).
double min_separation(const NodeSet &nodes);

// Node-set CSV: header `id,x,y,s,h,tag`, values at 17 significant digits.
void write_nodes_csv(std::ostream &out, const NodeSet &nodes);
void write_nodes_csv(const std::string &path, const NodeSet &nodes);
/// Reads positions, spacing, support and tags; the domain must be supplied.
NodeSet read_nodes_csv(std::istream &in, const DomainSpec &domain);
NodeSet read_nodes_csv(const std::string &path, const DomainSpec &domain);

std::string to_string(BoundaryTag tag);

} // namespace clabfm
