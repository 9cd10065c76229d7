#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clabfm/errors.hpp"
#include "clabfm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace clabfm;

namespace {

// Brute force over all pairs and the 3x3 periodic images.
std::vector<int> scan_neighbors(const NodeSet &nodes, int i, double radius) {
  std::vector<int> out;
  const Vec2 pi = nodes.positions[i];
  for (int j = 0; j < nodes.size(); ++j) {
    if (j == i) continue;
    double best = 1e300;
    for (int sx = -1; sx <= 1; ++sx)
      for (int sy = -1; sy <= 1; ++sy) {
        const double dx = nodes.positions[j].x + sx * nodes.domain.width() - pi.x;
        const double dy = nodes.positions[j].y + sy * nodes.domain.height() - pi.y;
        best = std::min(best, std::hypot(dx, dy));
      }
    if (best < radius) out.push_back(j);
  }
  return out;
}

} // namespace

TEST_CASE("min-image offset picks the nearest periodic copy") {
  const DomainSpec d = DomainSpec::unit_periodic_square();
  const Vec2 r = d.min_image({0.95, 0.5}, {0.05, 0.52});
  CHECK(r.x == doctest::Approx(0.1));
  CHECK(r.y == doctest::Approx(0.02));
  const Vec2 back = d.min_image({0.05, 0.52}, {0.95, 0.5});
  CHECK(back.x == doctest::Approx(-0.1));
  CHECK(d.wrap({1.25, -0.25}).x == doctest::Approx(0.25));
  CHECK(d.wrap({1.25, -0.25}).y == doctest::Approx(0.75));
}

TEST_CASE("domain validation") {
  DomainSpec d = DomainSpec::unit_periodic_square();
  d.x_max = d.x_min;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  DomainSpec e = DomainSpec::unit_periodic_square();
  e.exclusions.push_back({{0.05, 0.5}, 0.1});
  CHECK_THROWS_AS(e.validate(), ConfigError);
  CHECK(DomainSpec::punctured_square().accessible_area() ==
        doctest::Approx(1.0 - M_PI * 0.01));
}

TEST_CASE("generated cloud is deterministic and quasi-uniform") {
  const NodeSet a = generate_nodes(DomainSpec::unit_periodic_square(), 1.0 / 20.0, 7);
  const NodeSet b = generate_nodes(DomainSpec::unit_periodic_square(), 1.0 / 20.0, 7);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) CHECK(a.positions[i] == b.positions[i]);
  // N s^2 close to one for a quasi-uniform fill
  CHECK(a.size() > 350);
  CHECK(a.size() < 550);
  CHECK(min_separation(a) > 0.5 / 20.0);
  for (const Vec2 p : a.positions) {
    CHECK(p.x >= 0.0);
    CHECK(p.x < 1.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y < 1.0);
  }
  CHECK(a.mean_spacing() == doctest::Approx(std::sqrt(1.0 / a.size())).epsilon(1e-12));
}

TEST_CASE("different seeds give different clouds") {
  const NodeSet a = generate_nodes(DomainSpec::unit_periodic_square(), 1.0 / 20.0, 1);
  const NodeSet b = generate_nodes(DomainSpec::unit_periodic_square(), 1.0 / 20.0, 2);
  bool differs = a.size() != b.size();
  for (int i = 0; !differs && i < a.size(); ++i) differs = !(a.positions[i] == b.positions[i]);
  CHECK(differs);
}

TEST_CASE("too coarse a spacing is a config error") {
  CHECK_THROWS_AS(generate_nodes(DomainSpec::unit_periodic_square(), 0.2, 1), ConfigError);
  CHECK_THROWS_AS(generate_nodes(DomainSpec::unit_periodic_square(), -1.0, 1), ConfigError);
}

TEST_CASE("punctured square tags rim nodes as Dirichlet") {
  const NodeSet n = generate_nodes(DomainSpec::punctured_square(), 1.0 / 20.0, 1);
  int rim = 0;
  for (int i = 0; i < n.size(); ++i) {
    const double r = norm(n.positions[i] - Vec2{0.5, 0.5});
    CHECK(r >= 0.1 - 1e-12);
    if (n.is_dirichlet(i)) {
      ++rim;
      CHECK(r == doctest::Approx(0.1).epsilon(1e-9));
    }
  }
  // circumference / s, give or take
  CHECK(rim >= 9);
  CHECK(rim <= 16);
}

TEST_CASE("neighbor lists match a brute-force scan") {
  const NodeSet base = generate_nodes(DomainSpec::unit_periodic_square(), 1.0 / 20.0, 3);
  const NodeSet n = build_neighbors(base, 1.35);
  REQUIRE(n.has_neighbors());
  for (int i = 0; i < n.size(); ++i) {
    CHECK(n.support[i] == doctest::Approx(1.35 * n.spacing[i]));
    const auto expect = scan_neighbors(n, i, 2.0 * n.support[i]);
    CHECK(n.neighbors[i] == expect);
  }
}

TEST_CASE("set_support rebuilds one list") {
  NodeSet n = build_neighbors(generate_nodes(DomainSpec::unit_periodic_square(), 1.0 / 20.0, 3), 1.2);
  const int i = 17;
  const double h = 1.7 * n.spacing[i];
  set_support(n, i, h);
  CHECK(n.support[i] == h);
  CHECK(n.neighbors[i] == scan_neighbors(n, i, 2.0 * h));
  CHECK_THROWS_AS(set_support(n, i, 0.3), ConfigError);
}

TEST_CASE("a basis larger than the stencil is a stencil error") {
  const NodeSet base = generate_nodes(DomainSpec::unit_periodic_square(), 1.0 / 20.0, 3);
  CHECK_THROWS_AS(build_neighbors(base, 1.05, 100), StencilError);
  CHECK_THROWS_AS(build_neighbors(base, 1.0, 0), ConfigError);
}

TEST_CASE("node csv round-trips exactly") {
  const NodeSet a = build_neighbors(generate_nodes(DomainSpec::punctured_square(), 1.0 / 20.0, 5), 1.2);
  std::stringstream ss;
  write_nodes_csv(ss, a);
  const std::string text = ss.str();
  CHECK(text.rfind("id,x,y,s,h,tag\n", 0) == 0);
  const NodeSet b = read_nodes_csv(ss, DomainSpec::punctured_square());
  REQUIRE(b.size() == a.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.positions[i] == b.positions[i]);
    CHECK(a.spacing[i] == b.spacing[i]);
    CHECK(a.support[i] == b.support[i]);
    CHECK(a.tags[i] == b.tags[i]);
  }
  std::stringstream again;
  write_nodes_csv(again, b);
  CHECK(again.str() == text);
}

TEST_CASE("malformed node csv") {
  std::stringstream no_header("0,0.1,0.1,0.05,0,interior\n");
  CHECK_THROWS_AS(read_nodes_csv(no_header, DomainSpec::unit_periodic_square()), ConfigError);
  std::stringstream bad_tag("id,x,y,s,h,tag\n0,0.1,0.1,0.05,0,wall\n");
  CHECK_THROWS_AS(read_nodes_csv(bad_tag, DomainSpec::unit_periodic_square()), ConfigError);
}
