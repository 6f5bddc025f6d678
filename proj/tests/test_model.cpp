#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "machcombust/model.hpp"

using namespace mc;

namespace {
constexpr double kPi = 3.14159265358979323846;

ModelParams small_params() {
  ModelParams p;
  p.c0 = 0.05;
  p.mu.kind = MuLawKind::Affine;
  p.mu.mu0 = 0.05;
  p.mu.mu1 = 0.01;
  p.alpha = 0.5;
  p.beta = 2.0;
  p.rho_tilde = 1.0;
  return p;
}
}  // namespace

TEST_CASE("mass step: constants are steady and the mean is conserved") {
  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::A);
  ModelParams p = small_params();
  StepControls ctl;
  ctl.dt = 1e-2;

  ScalarField c(g, Loc::Center, 1.3);
  VectorField Phi(g);
  ScalarField out = mass_step_linearized(c, Phi, c, ctl.dt, Regime::A, p, ctl);
  out.for_interior([&](int, int, double v) { CHECK(v == doctest::Approx(1.3).epsilon(1e-12)); });

  std::mt19937 rng(9);
  std::uniform_real_distribution<double> d(1.0, 2.0);
  ScalarField r(g, Loc::Center);
  r.set_interior([&](int, int) { return d(rng); });
  ScalarField r2 = mass_step_linearized(r, Phi, r, ctl.dt, Regime::A, p, ctl);
  CHECK(std::abs(mean(r2) - mean(r)) < 1e-12);
  // pure diffusion obeys the maximum principle within the band
  double mn = 10, mx = -10;
  r2.for_interior([&](int, int, double v) {
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  });
  CHECK(mn > 1.0 - 1e-10);
  CHECK(mx < 2.0 + 1e-10);
}

TEST_CASE("mass step: L2 distance to the mean is non-increasing") {
  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::C);
  ModelParams p = small_params();
  StepControls ctl;
  ctl.dt = 5e-3;
  ScalarField r(g, Loc::Center);
  r.set_interior(
      [&](int i, int j) { return 1.0 + 0.3 * std::cos(kPi * g.xc(i)) * std::cos(kPi * g.yc(j)); });
  // advect with a discretely divergence-free vortex
  ScalarField psi(g, Loc::Center);
  psi.set_interior([&](int i, int j) {
    return 0.02 * std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j));
  });
  VectorField Phi = perp_gradient(psi);
  ScalarField r2 = mass_step_linearized(r, Phi, r, ctl.dt, Regime::C, p, ctl);
  ScalarField d0 = r, d1 = r2;
  for (auto* f : {&d0, &d1}) subtract_mean(*f);
  CHECK(l2_norm(d1) <= l2_norm(d0) + 1e-10);
}

TEST_CASE("init_from_velocity: zero and divergence-free data give constant density") {
  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::C);
  ModelParams p = small_params();
  FluidState st = init_from_velocity(VectorField(g), p, 1.0);
  st.rho.for_interior([&](int, int, double v) { CHECK(v == doctest::Approx(1.0).epsilon(1e-10)); });

  ScalarField psi(g, Loc::Center);
  psi.set_interior(
      [&](int i, int j) { return std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j)); });
  VectorField u0 = perp_gradient(psi);
  FluidState st2 = init_from_velocity(u0, p, 1.0);
  st2.rho.for_interior(
      [&](int, int, double v) { CHECK(v == doctest::Approx(1.0).epsilon(1e-8)); });
  VectorField v = compute_v(st2, p);
  // constant density: v == u
  v.for_u([&](int i, int j, double w) { CHECK(w == doctest::Approx(u0.u(i, j)).epsilon(1e-8)); });
}

TEST_CASE("init_from_velocity: manufactured round trip at order 2") {
  ModelParams p = small_params();
  auto rho_star = [](double x, double y) {
    return 1.0 + 0.3 * std::cos(kPi * x) * std::cos(kPi * y);
  };
  auto err = [&](int n) {
    Grid g = make_grid(n, n, 1.0, 1.0, Regime::A);
    VectorField u0(g);
    // u0 = c0 grad(1/rho*) + perp-grad part, both with zero normal trace
    auto sx = [&](double x, double y) {
      const double r = rho_star(x, y);
      return -(-0.3 * kPi * std::sin(kPi * x) * std::cos(kPi * y)) / (r * r);
    };
    auto sy = [&](double x, double y) {
      const double r = rho_star(x, y);
      return -(-0.3 * kPi * std::cos(kPi * x) * std::sin(kPi * y)) / (r * r);
    };
    auto s2 = [](double t) { return std::sin(kPi * t) * std::sin(kPi * t); };
    auto ds2 = [](double t) { return 2 * kPi * std::sin(kPi * t) * std::cos(kPi * t); };
    u0.set_u([&](int i, int j) {
      const double x = u0.xu(i), y = u0.yu(j);
      return p.c0 * sx(x, y) + 0.2 * s2(x) * ds2(y);
    });
    u0.set_v([&](int i, int j) {
      const double x = u0.xv(i), y = u0.yv(j);
      return p.c0 * sy(x, y) - 0.2 * ds2(x) * s2(y);
    });
    double target = 0;
    {
      Grid gg = g;
      double acc = 0;
      for (int j = 0; j < gg.ny; ++j)
        for (int i = 0; i < gg.nx; ++i) acc += rho_star(gg.xc(i), gg.yc(j));
      target = acc / (gg.nx * gg.ny);
    }
    FluidState st = init_from_velocity(u0, p, target);
    ScalarField e(g, Loc::Center);
    e.set_interior([&](int i, int j) { return st.rho.at(i, j) - rho_star(g.xc(i), g.yc(j)); });
    return l2_norm(e);
  };
  const double rate = std::log2(err(16) / err(32));
  CHECK(rate > 1.9);
}

TEST_CASE("picard step: equilibrium is an exact fixed point") {
  Grid g = make_grid(12, 12, 1.0, 1.0, Regime::C);
  ModelParams p = small_params();
  StepControls ctl;
  ctl.dt = 1e-2;
  FluidState st{0.0, ScalarField(g, Loc::Center, 1.3), VectorField(g),
                ScalarField(g, Loc::Center), ScalarField(g, Loc::Center)};
  apply_bc(st.rho, rho_bc(p, Regime::C));
  auto [next, rep] = picard_step(st, ctl, p);
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.deltas.back() <= 1e-12);
  CHECK(l2_norm(next.u) <= 1e-12);
}

TEST_CASE("advance: small data in regime A keeps every invariant") {
  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::A);
  ModelParams p = small_params();
  p.friction_b = [](double, double) { return 0.5; };
  StepControls ctl;
  ctl.dt = 2e-3;

  ScalarField psi(g, Loc::Center);
  psi.set_interior([&](int i, int j) {
    return 0.05 * std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j));
  });
  VectorField u0 = perp_gradient(psi);
  FluidState st = init_from_velocity(u0, p, 1.0);
  const double mean0 = mean(st.rho);

  int steps = 0;
  double worst_res = 0;
  bool bounds_ok = true, pic_ok = true;
  StepSink sink = [&](const FluidState& s, const FluidState&, const PicardReport& r, double) {
    ++steps;
    worst_res = std::max(worst_res, r.constraint_residual);
    pic_ok = pic_ok && r.converged;
    s.rho.for_interior([&](int, int, double v) {
      bounds_ok = bounds_ok && v > p.alpha - 1e-8 && v < p.beta + 1e-8;
    });
  };
  FluidState fin = advance(std::move(st), 0.01, ctl, p, sink);
  CHECK(steps == 5);
  CHECK(pic_ok);
  CHECK(bounds_ok);
  CHECK(worst_res <= ctl.constraint_tol);
  CHECK(std::abs(mean(fin.rho) - mean0) < 1e-11);
  CHECK(std::abs(mean(fin.pi)) < 1e-12);
}

TEST_CASE("advance: regime B relaxes toward the boundary density") {
  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::B);
  ModelParams p = small_params();
  StepControls ctl;
  ctl.dt = 2e-3;

  auto rho_star = [&](double x, double y) {
    return 1.0 + 0.25 * std::sin(kPi * x) * std::sin(kPi * y);
  };
  VectorField u0(g);
  u0.set_u([&](int i, int j) {
    const double x = u0.xu(i), y = u0.yu(j);
    const double r = rho_star(x, y);
    return -p.c0 * (0.25 * kPi * std::cos(kPi * x) * std::sin(kPi * y)) / (r * r);
  });
  u0.set_v([&](int i, int j) {
    const double x = u0.xv(i), y = u0.yv(j);
    const double r = rho_star(x, y);
    return -p.c0 * (0.25 * kPi * std::sin(kPi * x) * std::cos(kPi * y)) / (r * r);
  });
  FluidState st = init_from_velocity(u0, p, 0.0);

  std::vector<double> dist;
  StepSink sink = [&](const FluidState& s, const FluidState&, const PicardReport&, double) {
    ScalarField d = s.rho;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) d.at(i, j) -= p.rho_tilde;
    dist.push_back(l2_norm(d));
  };
  {
    ScalarField d0 = st.rho;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) d0.at(i, j) -= p.rho_tilde;
    dist.push_back(l2_norm(d0));
  }
  advance(std::move(st), 0.012, ctl, p, sink);
  REQUIRE(dist.size() >= 4);
  for (std::size_t k = 1; k < dist.size(); ++k) CHECK(dist[k] <= dist[k - 1] + 1e-8);
  CHECK(dist.back() < dist.front());
}

TEST_CASE("picard step: oversized dt is rejected") {
  Grid g = make_grid(12, 12, 1.0, 1.0, Regime::C);
  ModelParams p = small_params();
  p.mu.mu0 = 5e-3;
  p.mu.mu1 = 0.0;
  StepControls ctl;
  ctl.dt = 10.0;
  ctl.pic_max = 12;

  ScalarField psi(g, Loc::Center);
  psi.set_interior([&](int i, int j) {
    return 3.0 * std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j));
  });
  VectorField u0 = perp_gradient(psi);
  FluidState st = init_from_velocity(u0, p, 1.0);
  CHECK_THROWS_AS(picard_step(st, ctl, p), Error);
}

TEST_CASE("residual_divergence_constraint flags corrupted velocity") {
  Grid g = make_grid(12, 12, 1.0, 1.0, Regime::C);
  ModelParams p = small_params();
  FluidState st{0.0, ScalarField(g, Loc::Center, 1.0), VectorField(g),
                ScalarField(g, Loc::Center), ScalarField(g, Loc::Center)};
  apply_bc(st.rho, rho_bc(p, Regime::C));
  CHECK(residual_divergence_constraint(st, p) == doctest::Approx(0.0));
  st.u.u(5, 5) = 1.0;
  CHECK(residual_divergence_constraint(st, p) > 1.0);
}
