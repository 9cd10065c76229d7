#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "clabfm/errors.hpp"
#include "clabfm/solvers.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace clabfm;

namespace {

constexpr double kPi = std::numbers::pi;

struct BesselRef {
  int n;
  double z;
  double value;
};

// 40-digit mpmath.besseli values, rounded to double
const BesselRef kBessel[] = {
    {0, 100.0 / (4.0 * kPi), 411.0009178741826701338459},
    {1, 100.0 / (4.0 * kPi), 384.2354338926587540662699},
    {5, 100.0 / (4.0 * kPi), 81.52783810317003472679988},
    {20, 100.0 / (4.0 * kPi), 8.533065583979829445424155e-7},
    {40, 100.0 / (4.0 * kPi), 1.76073501147027746558168e-24},
    {0, 0.5, 1.063483370741323519263184},
    {3, 2.0, 0.2127399592398526552723544},
    {10, 50.0, 107159715947763704654.8832},
    {0, 50.0, 293255378384933632665.4675},
};

} // namespace

TEST_CASE("modified Bessel function against high-precision values") {
  for (const auto &r : kBessel) {
    INFO("n = " << r.n << ", z = " << r.z);
    CHECK(std::abs(bessel_i(r.n, r.z) - r.value) <= 1e-12 * r.value);
  }
  CHECK(bessel_i(0, 0.0) == 1.0);
  CHECK(bessel_i(3, 0.0) == 0.0);
  CHECK_THROWS_AS(bessel_i(41, 1.0), DomainError);
  CHECK_THROWS_AS(bessel_i(0, 51.0), DomainError);
  CHECK_THROWS_AS(bessel_i(-1, 1.0), DomainError);
}

TEST_CASE("Bessel recurrence") {
  // I_{n-1}(z) - I_{n+1}(z) = (2n/z) I_n(z)
  for (double z : {0.3, 4.0, 7.957747154594767, 30.0})
    for (int n = 1; n < 30; ++n) {
      const double lhs = bessel_i(n - 1, z) - bessel_i(n + 1, z);
      const double rhs = 2.0 * n / z * bessel_i(n, z);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("analytic Burgers solution starts from the sine") {
  for (double x = 0.0; x < 1.0; x += 0.0625)
    CHECK(std::abs(burgers_analytic(x, 1e-6, 100.0) - std::sin(2 * kPi * x)) <= 1e-3);
  CHECK_THROWS_AS(burgers_analytic(0.3, -1.0, 100.0), DomainError);
  CHECK_THROWS_AS(burgers_analytic(0.3, 0.1, -1.0), DomainError);
}

TEST_CASE("analytic solution satisfies the viscous Burgers equation") {
  const double Re = 100.0, h = 1e-4, dt = 1e-5;
  for (double t : {0.05, 0.3, 0.8})
    for (double x : {0.1, 0.45, 0.5, 0.62, 0.9}) {
      const double u = burgers_analytic(x, t, Re);
      const double ut = (burgers_analytic(x, t + dt, Re) - burgers_analytic(x, t - dt, Re)) / (2 * dt);
      const double up = burgers_analytic(x + h, t, Re), um = burgers_analytic(x - h, t, Re);
      const double ux = (up - um) / (2 * h);
      const double uxx = (up - 2 * u + um) / (h * h);
      const double residual = ut + u * ux - uxx / Re;
      const double scale = std::abs(ut) + std::abs(u * ux) + std::abs(uxx / Re);
      CHECK(std::abs(residual) <= 1e-4 * scale + 1e-6);
    }
}

TEST_CASE("analytic solution is odd about the centre and decays") {
  for (double x : {0.1, 0.2, 0.35})
    CHECK(burgers_analytic(x, 0.4, 100.0) == doctest::Approx(-burgers_analytic(1.0 - x, 0.4, 100.0)));
  CHECK(std::abs(burgers_analytic(0.25, 1.0, 100.0)) < std::abs(burgers_analytic(0.25, 0.1, 100.0)));
}

TEST_CASE("time step arithmetic") {
  BurgersConfig c;
  BurgersState st;
  st.u = Eigen::VectorXd::Constant(4, 0.5);
  st.u[2] = -2.0;
  st.v = Eigen::VectorXd::Zero(4);
  const double s = 0.02;
  const double adv = c.cfl_adv * s / 2.0;
  const double diff = c.cfl_diff * s * s * c.Re;
  CHECK(compute_dt(st, c, s) == doctest::Approx(std::min(adv, diff)));
  c.paper_exact_dt = true;
  CHECK(compute_dt(st, c, s) == doctest::Approx(c.cfl_diff * s * s / c.Re));
  st.u.setZero();
  c.paper_exact_dt = false;
  CHECK(compute_dt(st, c, s) == doctest::Approx(diff));
}

TEST_CASE("RK4 step reproduces the Taylor polynomial of a linear system") {
  const double lam = -1.7, dt = 0.3;
  RateFunction f = [&](const BurgersState &s) {
    BurgersRates r;
    r.du = lam * s.u;
    r.dv = 2.0 * lam * s.v;
    return r;
  };
  BurgersState s0;
  s0.u = Eigen::VectorXd::Constant(3, 1.0);
  s0.v = Eigen::VectorXd::Constant(3, 2.0);
  const BurgersState s1 = rk4_step(s0, f, dt);
  auto taylor = [](double z) { return 1 + z + z * z / 2 + z * z * z / 6 + z * z * z * z / 24; };
  CHECK(s1.u[0] == doctest::Approx(taylor(lam * dt)).epsilon(1e-14));
  CHECK(s1.v[1] == doctest::Approx(2.0 * taylor(2 * lam * dt)).epsilon(1e-14));
  CHECK(s1.t == doctest::Approx(dt));
  CHECK_THROWS_AS(rk4_step(s0, f, 0.0), DomainError);
}

TEST_CASE("RK4 step integrates a quartic in time exactly") {
  // du/dt = 4 t^3 is integrated exactly by a fourth-order method
  RateFunction f = [](const BurgersState &s) {
    BurgersRates r;
    r.du = Eigen::VectorXd::Constant(1, 4.0 * s.t * s.t * s.t);
    r.dv = Eigen::VectorXd::Zero(1);
    return r;
  };
  BurgersState s;
  s.u = Eigen::VectorXd::Zero(1);
  s.v = Eigen::VectorXd::Zero(1);
  s.t = 0.5;
  const BurgersState e = rk4_step(s, f, 0.25);
  CHECK(e.u[0] == doctest::Approx(std::pow(0.75, 4) - std::pow(0.5, 4)).epsilon(1e-14));
}

TEST_CASE("non-finite state raises a divergence error") {
  RateFunction f = [](const BurgersState &s) {
    BurgersRates r;
    r.du = Eigen::VectorXd::Constant(s.u.size(), INFINITY);
    r.dv = Eigen::VectorXd::Zero(s.v.size());
    return r;
  };
  BurgersState s;
  s.u = Eigen::VectorXd::Zero(2);
  s.v = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(rk4_step(s, f, 0.1), DivergenceError);
}

TEST_CASE("Burgers configuration validation") {
  BurgersConfig c;
  CHECK_NOTHROW(c.validate());
  c.series_terms = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.series_terms = 41;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.Re = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("short explicit Burgers run tracks the analytic solution") {
  BurgersConfig c;
  c.s = 1.0 / 20.0;
  c.t_end = 0.05;
  const BurgersRun run = run_burgers(c);
  CHECK_FALSE(run.diverged);
  REQUIRE(run.t.size() == 6);
  CHECK(run.t.front() == 0.0);
  CHECK(run.t.back() == doctest::Approx(0.05));
  CHECK(run.l2.front() < 1e-3);
  CHECK(run.max_l2 < 0.1);
  CHECK(run.max_abs_v == 0.0);
  CHECK(run.solver.solves == 0);
  std::ostringstream csv;
  write_burgers_csv(csv, run);
  CHECK(csv.str().rfind("t,l2\n", 0) == 0);
}

TEST_CASE("Poisson manufactured solution") {
  for (double x : {0.1, 0.3, 0.77})
    for (double y : {0.2, 0.6}) {
      const double h = 1e-4;
      const double lap = (poisson_exact(x + h, y) + poisson_exact(x - h, y) + poisson_exact(x, y + h) +
                          poisson_exact(x, y - h) - 4 * poisson_exact(x, y)) /
                         (h * h);
      CHECK(poisson_source(x, y) == doctest::Approx(lap).epsilon(1e-5).scale(1));
    }
}

TEST_CASE("coarse Poisson study") {
  PoissonConfig c;
  c.scheme = SchemeSpec::from_label('c');
  c.resolutions = {1.0 / 20.0};
  const PoissonStudy st = run_poisson(c);
  REQUIRE(st.rows.size() == 1);
  CHECK(st.explicit_scheme.label == 'a');
  CHECK(st.rows[0].l2_explicit < 0.1);
  CHECK(st.rows[0].l2_compact < 0.1);
  CHECK(st.rows[0].residual_compact <= 1e-12);
  c.resolutions.clear();
  CHECK_THROWS_AS(run_poisson(c), ConfigError);
}
