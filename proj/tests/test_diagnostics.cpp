#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "machcombust/diagnostics.hpp"

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

FluidState unit_state(const Grid& g, const ModelParams& p, double rho_val, double u_val,
                      double v_val) {
  FluidState st{0.0, ScalarField(g, Loc::Center, rho_val), VectorField(g),
                ScalarField(g, Loc::Center), ScalarField(g, Loc::Center)};
  st.u.set_u([&](int, int) { return u_val; });
  st.u.set_v([&](int, int) { return v_val; });
  apply_bc(st.rho, rho_bc(p, g.bc_regime));
  return st;
}
}  // namespace

TEST_CASE("M1: tangential unit flow with b = mu = 1 integrates to the perimeter") {
  Grid g = make_grid(16, 12, 1.5, 1.0, Regime::A);
  ModelParams p = small_params();
  p.mu = MuLaw{MuLawKind::Constant, 1.0, 0.0, 0.0};
  p.friction_b = [](double, double) { return 1.0; };
  FluidState st = unit_state(g, p, 1.0, 1.0, 1.0);
  auto [m1, m2] = boundary_functionals(st, p);
  CHECK(m1 == doctest::Approx(2 * (g.lx + g.ly)).epsilon(1e-12));
  // constant fields have no tangential shear and no density gradient
  CHECK(m2 == doctest::Approx(0.0));
}

TEST_CASE("M1 is nonnegative and vanishes without friction or outside regime A") {
  ModelParams p = small_params();
  p.friction_b = [](double x, double y) { return 0.3 + 0.2 * x + 0.1 * y; };
  for (Regime r : {Regime::A, Regime::B, Regime::C}) {
    Grid g = make_grid(12, 12, 1.0, 1.0, r);
    FluidState st = unit_state(g, p, 1.2, 0.0, 0.0);
    st.u.set_u([&](int i, int j) { return 0.1 * std::sin(3 * i + j); });
    st.u.set_v([&](int i, int j) { return 0.1 * std::cos(i - 2 * j); });
    auto [m1, m2] = boundary_functionals(st, p);
    if (r == Regime::A) {
      CHECK(m1 >= 0.0);
    } else {
      CHECK(m1 == 0.0);
      CHECK(m2 == 0.0);
    }
  }
  ModelParams p0 = small_params();  // b == 0
  Grid g = make_grid(12, 12, 1.0, 1.0, Regime::A);
  FluidState st = unit_state(g, p0, 1.2, 0.7, -0.4);
  auto [m1, m2] = boundary_functionals(st, p0);
  CHECK(m1 == 0.0);
  CHECK(m2 == 0.0);
}

TEST_CASE("energy_record matches hand values on constant states") {
  Grid g = make_grid(12, 12, 2.0, 1.0, Regime::C);
  ModelParams p = small_params();
  const double dt = 1e-2, delta = 0.04;
  FluidState prev = unit_state(g, p, 1.3, 0.0, 0.0);
  FluidState st = unit_state(g, p, 1.3 + delta, 0.0, 0.0);
  st.t = dt;
  DiagnosticsRecord rec = energy_record(st, prev, dt, p, 3);
  const double area = std::sqrt(g.lx * g.ly);
  CHECK(rec.rho_l2 == doctest::Approx((1.3 + delta) * area).epsilon(1e-13));
  CHECK(rec.rho_t_l2 == doctest::Approx(delta / dt * area).epsilon(1e-13));
  CHECK(rec.grad_rho_l2 == doctest::Approx(0.0));
  CHECK(rec.lap_rho_l2 == doctest::Approx(0.0));
  CHECK(rec.u_l2 == doctest::Approx(0.0));
  CHECK(rec.rho_min == doctest::Approx(1.34).epsilon(1e-14));
  CHECK(rec.rho_max == doctest::Approx(1.34).epsilon(1e-14));
  CHECK(rec.rho_mean == doctest::Approx(1.34).epsilon(1e-14));
  CHECK(rec.picard_iters == 3);
  // F collects |grad v|^2 + |lap rho|^2 + |rho_t|^2
  CHECK(rec.F_t == doctest::Approx(rec.rho_t_l2 * rec.rho_t_l2).epsilon(1e-13));
  CHECK(rec.finite());
}

TEST_CASE("csv header and rows agree with the column list and keep full precision") {
  const std::string hdr = csv_header();
  std::size_t cols = 1;
  for (char c : hdr)
    if (c == ',') ++cols;
  CHECK(cols == diagnostics_columns().size());

  DiagnosticsRecord r;
  r.t = 1.0 / 3.0;
  r.rho_l2 = 0.1 + 0.2;  // not exactly representable; must round-trip
  r.picard_iters = 7;
  const std::string row = csv_row(r);
  std::size_t vals = 0;
  for (char c : row)
    if (c == ',') ++vals;
  CHECK(vals + 1 == diagnostics_columns().size());
  std::stringstream ss(row);
  std::string tok;
  std::getline(ss, tok, ',');
  CHECK(std::strtod(tok.c_str(), nullptr) == r.t);
  std::getline(ss, tok, ',');  // dt
  std::getline(ss, tok, ',');
  CHECK(std::strtod(tok.c_str(), nullptr) == r.rho_l2);
}

TEST_CASE("serrin: exponent validation enforces 2/s + 2/r <= 1 and r > 2") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(SerrinAccumulator::validate(2.0, 8.0), Error);
  CHECK_THROWS_AS(SerrinAccumulator::validate(3.0, 3.0), Error);
  CHECK_THROWS_AS(SerrinAccumulator::validate(4.0, 0.5), Error);
  CHECK_NOTHROW(SerrinAccumulator::validate(4.0, 4.0));
  CHECK_NOTHROW(SerrinAccumulator::validate(inf, 2.0));
  CHECK_NOTHROW(SerrinAccumulator::validate(3.0, inf));
}

TEST_CASE("serrin: left-endpoint accumulation is exact for frozen fields") {
  Grid g = make_grid(12, 12, 1.0, 1.0, Regime::C);
  ModelParams p = small_params();
  FluidState st = unit_state(g, p, 1.0, 0.3, -0.2);
  const double dt = 0.05;
  const int steps = 7;

  SerrinAccumulator acc = make_serrin(4.0, 4.0, SerrinTarget::Velocity);
  for (int k = 0; k < steps; ++k) serrin_accumulate(acc, st, p, dt);
  const double n4 = lp_norm(st.u, 4.0);
  CHECK(acc.value() ==
        doctest::Approx(std::pow(std::pow(n4, 4.0) * steps * dt, 0.25)).epsilon(1e-13));

  SerrinAccumulator sup = make_serrin(std::numeric_limits<double>::infinity(), 2.0,
                                      SerrinTarget::GradRho);
  // constant density: sup of |grad rho|_inf stays zero
  for (int k = 0; k < steps; ++k) serrin_accumulate(sup, st, p, dt);
  CHECK(sup.value() == 0.0);

  BlowupStatus ok = blowup_monitor(acc, 2 * acc.value() + 1.0);
  CHECK_FALSE(ok.tripped);
  BlowupStatus bad = blowup_monitor(acc, 0.5 * acc.value());
  CHECK(bad.tripped);
  CHECK(bad.value == doctest::Approx(acc.value()));
}

TEST_CASE("ledger: a clean small-data run has no violations; corruption is flagged") {
  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::A);
  ModelParams p = small_params();
  p.friction_b = [](double, double) { return 0.5; };
  StepControls ctl;
  ctl.dt = 2e-3;

  ScalarField psi(g, Loc::Center);
  psi.set_interior([&](int i, int j) {
    return 0.05 * std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j));
  });
  ScalarField d(g, Loc::Center);
  d.set_interior([&](int i, int j) {
    return 0.02 * std::cos(kPi * g.xc(i)) * std::cos(kPi * g.yc(j));
  });
  VectorField u0 = perp_gradient(psi);
  {
    // add a compatible gradient part so the density starts non-constant
    ModelParams q = p;
    ScalarField rho0(g, Loc::Center);
    rho0.set_interior([&](int i, int j) { return 1.0 + d.at(i, j); });
    apply_bc(rho0, rho_bc(q, Regime::A));
    ScalarField sig = sigma_field(rho0, q, Regime::A);
    VectorField gs = gradient(sig, sigma_bc(q, Regime::A));
    axpy(u0, q.c0, gs);
  }
  FluidState st = init_from_velocity(u0, p, mean(with_bc(d, BoundarySpec::neumann_zero())) + 1.0);

  std::vector<DiagnosticsRecord> recs;
  StepSink sink = [&](const FluidState& s, const FluidState& prev, const PicardReport& r,
                      double dts) { recs.push_back(energy_record(s, prev, dts, p, r.iterations)); };
  advance(std::move(st), 0.024, ctl, p, sink);
  REQUIRE(recs.size() >= 10);

  LedgerReport rep = estimate_ledger(recs, p);
  REQUIRE(rep.entries.size() == 3);
  for (const auto& e : rep.entries) {
    CHECK(std::isfinite(e.fitted_C));
    CHECK(e.violations == 0);
  }
  CHECK(rep.total_violations() == 0);

  // corrupting one record's energy must break the fitted envelope
  recs[recs.size() / 2].sqrt_rho_v_l2 = 1.0;
  LedgerReport bad = estimate_ledger(recs, p);
  CHECK(bad.total_violations() > 0);
}
