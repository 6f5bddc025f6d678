#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "machcombust/mms.hpp"

using namespace mc;

namespace {

// Independent check of the analytic forcings: evaluate the PDE residual of
// (rho*, u*) with high-order finite differences of the closed-form fields.
struct FdOracle {
  const ManufacturedCase& mc;
  double h = 1e-4;

  double rho(double x, double y, double t) const { return mc.rho_star(x, y, t); }
  double uc(double x, double y, double t, int c) const { return mc.u_star(x, y, t, c); }

  template <class F>
  double dx(F f, double x, double y, double t) const {
    return (-f(x + 2 * h, y, t) + 8 * f(x + h, y, t) - 8 * f(x - h, y, t) + f(x - 2 * h, y, t)) /
           (12 * h);
  }
  template <class F>
  double dy(F f, double x, double y, double t) const {
    return (-f(x, y + 2 * h, t) + 8 * f(x, y + h, t) - 8 * f(x, y - h, t) + f(x, y - 2 * h, t)) /
           (12 * h);
  }
  template <class F>
  double dt(F f, double x, double y, double t) const {
    return (-f(x, y, t + 2 * h) + 8 * f(x, y, t + h) - 8 * f(x, y, t - h) + f(x, y, t - 2 * h)) /
           (12 * h);
  }
  template <class F>
  double lap(F f, double x, double y, double t) const {
    auto fx = [&](double xx, double yy, double tt) { return dx(f, xx, yy, tt); };
    auto fy = [&](double xx, double yy, double tt) { return dy(f, xx, yy, tt); };
    return dx(fx, x, y, t) + dy(fy, x, y, t);
  }

  double mass_residual(double x, double y, double t) const {
    auto r = [&](double xx, double yy, double tt) { return rho(xx, yy, tt); };
    auto logr = [&](double xx, double yy, double tt) { return std::log(rho(xx, yy, tt)); };
    auto sig = [&](double xx, double yy, double tt) { return 1.0 / rho(xx, yy, tt); };
    const double v1 = uc(x, y, t, 0) - mc.params.c0 * dx(sig, x, y, t);
    const double v2 = uc(x, y, t, 1) - mc.params.c0 * dy(sig, x, y, t);
    return dt(r, x, y, t) + v1 * dx(r, x, y, t) + v2 * dy(r, x, y, t) -
           mc.params.c0 * lap(logr, x, y, t);
  }

  double mom_residual(double x, double y, double t, int c) const {
    auto u1 = [&](double xx, double yy, double tt) { return uc(xx, yy, tt, 0); };
    auto u2 = [&](double xx, double yy, double tt) { return uc(xx, yy, tt, 1); };
    auto un = [&](double xx, double yy, double tt) { return uc(xx, yy, tt, 0); };
    auto divu = [&](double xx, double yy, double tt) {
      return dx(u1, xx, yy, tt) + dy(u2, xx, yy, tt);
    };
    const double R = rho(x, y, t), mu = mc.params.mu.mu0;
    const double U = uc(x, y, t, 0), V = uc(x, y, t, 1);
    if (c == 0) {
      return R * dt(u1, x, y, t) + R * (U * dx(u1, x, y, t) + V * dy(u1, x, y, t)) -
             mu * (lap(u1, x, y, t) + dx(divu, x, y, t));
    }
    (void)un;
    return R * dt(u2, x, y, t) + R * (U * dx(u2, x, y, t) + V * dy(u2, x, y, t)) -
           mu * (lap(u2, x, y, t) + dy(divu, x, y, t));
  }
};

}  // namespace

TEST_CASE("catalog: three cases resolve and unknown names are rejected") {
  auto names = manufactured_catalog();
  REQUIRE(names.size() == 3);
  for (const auto& n : names) {
    ManufacturedCase mc = manufactured_case(n);
    CHECK(mc.name == n);
    mc.params.validate();
    // initial density stays inside the admissible band
    FluidState st = mc.initial_state(12, 12);
    st.rho.for_interior([&](int, int, double v) {
      CHECK(v >= mc.params.alpha);
      CHECK(v <= mc.params.beta);
    });
  }
  CHECK_THROWS_AS(manufactured_case("nope"), Error);
}

TEST_CASE("forcings agree with a finite-difference evaluation of the PDE residual") {
  const double pts[][3] = {{0.31, 0.47, 0.13}, {0.62, 0.18, 0.25}, {0.85, 0.73, 0.4}};
  for (const auto& name : manufactured_catalog()) {
    CAPTURE(name);
    ManufacturedCase mc = manufactured_case(name);
    FdOracle fd{mc};
    for (const auto& p : pts) {
      const double x = p[0], y = p[1], t = p[2];
      const double fm = mc.forcing.mass ? mc.forcing.mass(x, y, t) : 0.0;
      CHECK(fm == doctest::Approx(fd.mass_residual(x, y, t)).epsilon(1e-6).scale(1.0));
      for (int c : {0, 1}) {
        const double f = mc.forcing.mom(x, y, t, c);
        CHECK(f == doctest::Approx(fd.mom_residual(x, y, t, c)).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("taylor-green: forced run tracks the exact solution and refines at order 2") {
  ManufacturedCase mc = manufactured_case("const_density_taylor_green");
  MmsErrors c16 = forced_advance(mc, 16, 16, 2e-3, 0.01);
  CHECK(c16.rho < 1e-10);  // density stays exactly constant
  CHECK(c16.u < 0.05);
  MmsErrors c32 = forced_advance(mc, 32, 32, 5e-4, 0.01);
  CHECK(std::log2(c16.u / c32.u) > 1.8);
}

TEST_CASE("temporal study: first-order rate on a fixed grid") {
  ManufacturedCase mc = manufactured_case("diffusing_bump_neumann");
  RateTable t = convergence_study(mc, StudyKind::Temporal, {16, 16}, 0.02, 5e-3);
  CHECK(t.rate_rho > 0.85);
  CHECK(t.rate_u > 0.85);
  CHECK(t.csv().find("rate_rho") != std::string::npos);
}
