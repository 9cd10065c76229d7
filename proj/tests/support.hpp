#pragma once

#include "clabfm/geometry.hpp"

#include <random>

namespace clabfm::testing {

/// n x n lattice on the unit periodic square, each node shifted by up to
/// `jitter` spacings in each direction.
inline NodeSet lattice(int n, double jitter = 0.0, unsigned seed = 1) {
  NodeSet out;
  out.domain = DomainSpec::unit_periodic_square();
  const double s = 1.0 / n;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double dx = jitter > 0.0 ? u(rng) : 0.0;
      const double dy = jitter > 0.0 ? u(rng) : 0.0;
      out.positions.push_back(out.domain.wrap({(i + 0.5 + dx) * s, (j + 0.5 + dy) * s}));
      out.spacing.push_back(s);
      out.support.push_back(0.0);
      out.tags.push_back(BoundaryTag::interior);
    }
  return out;
}

/// The same cloud reflected about y = x.
inline NodeSet transposed(const NodeSet &nodes) {
  NodeSet out = nodes;
  for (auto &p : out.positions) p = {p.y, p.x};
  return out;
}

} // namespace clabfm::testing
