#include "machcombust/verify.hpp"

#include <cstdarg>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>

#include "machcombust/runner.hpp"

// Each criterion builds its own fixtures and reports one verdict. Everything
// is deterministic: fixed seeds, fixed configurations, no wall-clock input.

namespace mc {
namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double pair_rate(double coarse, double fine) { return std::log2(coarse / fine); }

// rate with an exactness guard: errors at roundoff level count as converged
double guarded_rate(const std::vector<double>& steps, const std::vector<double>& errs,
                    double exact_floor = 1e-12) {
  double mx = 0;
  for (double e : errs) mx = std::max(mx, e);
  if (mx <= exact_floor) return 99.0;
  return detail::ls_rate(steps, errs);
}

RunConfig base_config(Regime r, int n) {
  RunConfig c;
  c.nx = c.ny = n;
  c.lx = c.ly = 1.0;
  c.regime = r;
  c.params.c0 = 0.05;
  c.params.mu = MuLaw{MuLawKind::Affine, 0.05, 0.01, 0};
  c.params.alpha = 0.5;
  c.params.beta = 2.0;
  c.params.rho_tilde = 1.0;
  c.ic_kind = "vortex_bump";
  c.ic_rho_mean = 1.0;
  c.ic_amp_u = 0.05;
  c.ic_amp_rho = 0.1;
  c.controls.dt = 2e-3;
  c.t_end = 0.02;
  return c;
}

// ---------------------------------------------------------------------------
// 1. operator identities and stencil orders

CriterionResult c1_operators() {
  CriterionResult r{1, "operator_identities", true, ""};
  double worst_adj = 0;
  for (auto [nx, ny] : {std::pair{16, 16}, std::pair{33, 17}}) {
    Grid g = make_grid(nx, ny, 1.0, 1.0, Regime::A);
    std::mt19937 rng(101 * nx + ny);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    ScalarField f(g, Loc::Center);
    f.set_interior([&](int i, int j) {
      return (i >= 2 && i < nx - 2 && j >= 2 && j < ny - 2) ? d(rng) : 0.0;
    });
    VectorField F(g);
    F.set_u([&](int i, int j) {
      return (i >= 2 && i <= nx - 2 && j >= 2 && j < ny - 2) ? d(rng) : 0.0;
    });
    F.set_v([&](int i, int j) {
      return (i >= 2 && i < nx - 2 && j >= 2 && j <= ny - 2) ? d(rng) : 0.0;
    });
    const double a = inner(gradient(f, BoundarySpec::neumann_zero()), F);
    const double b = inner(f, divergence(F));
    worst_adj = std::max(worst_adj, std::abs(a + b) / (std::abs(a) + 1.0));
  }
  if (worst_adj > 1e-11) {
    r.pass = false;
    r.detail += fmt("adjointness defect %.2e; ", worst_adj);
  }

  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::A);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ScalarField f(g, Loc::Center);
  f.set_interior([&](int, int) { return d(rng); });
  VectorField P = perp_gradient(f);
  const double divp = lp_norm(divergence(P), std::numeric_limits<double>::infinity());
  VectorField G = gradient(f, BoundarySpec::neumann_zero());
  double curlg = 0;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      const double c = (G.v(i, j) - G.v(i - 1, j)) / g.hx - (G.u(i, j) - G.u(i, j - 1)) / g.hy;
      curlg = std::max(curlg, std::abs(c));
    }
  if (divp > 1e-11 || curlg > 1e-11) {
    r.pass = false;
    r.detail += fmt("identity defects div.perp=%.2e curl.grad=%.2e; ", divp, curlg);
  }

  std::vector<double> hs, eg, ed, el, ec;
  for (int n : {16, 32, 64}) {
    Grid gg = make_grid(n, n, 1.0, 1.0, Regime::A);
    hs.push_back(1.0 / n);
    ScalarField fc(gg, Loc::Center);
    fc.set_interior(
        [&](int i, int j) { return std::cos(kPi * gg.xc(i)) * std::cos(kPi * gg.yc(j)); });
    VectorField gr = gradient(fc, BoundarySpec::neumann_zero());
    VectorField ge(gg);
    ge.set_u([&](int i, int j) {
      return gr.u(i, j) + kPi * std::sin(kPi * ge.xu(i)) * std::cos(kPi * ge.yu(j));
    });
    ge.set_v([&](int i, int j) {
      return gr.v(i, j) + kPi * std::cos(kPi * ge.xv(i)) * std::sin(kPi * ge.yv(j));
    });
    eg.push_back(l2_norm(ge));

    VectorField Fs(gg);
    Fs.set_u([&](int i, int j) { return std::sin(kPi * Fs.xu(i)) * std::cos(kPi * Fs.yu(j)); });
    Fs.set_v([&](int i, int j) { return std::cos(kPi * Fs.xv(i)) * std::sin(kPi * Fs.yv(j)); });
    ScalarField dv = divergence(Fs);
    ScalarField de(gg, Loc::Center);
    de.set_interior([&](int i, int j) {
      return dv.at(i, j) - 2 * kPi * std::cos(kPi * gg.xc(i)) * std::cos(kPi * gg.yc(j));
    });
    ed.push_back(l2_norm(de));

    // fc has zero normal derivative at every wall, so the mirror ghost closure
    // is consistent and the full-domain error is clean second order
    ScalarField lp = laplacian(fc, BoundarySpec::neumann_zero());
    ScalarField le(gg, Loc::Center);
    le.set_interior([&](int i, int j) { return lp.at(i, j) + 2 * kPi * kPi * fc.at(i, j); });
    el.push_back(l2_norm(le));

    VectorField Fc(gg);
    Fc.set_v([&](int i, int j) { return std::sin(kPi * Fc.xv(i)) * std::sin(kPi * Fc.yv(j)); });
    double cs = 0;
    for (int j = 1; j < gg.ny; ++j)
      for (int i = 1; i < gg.nx; ++i) {
        const double c = (Fc.v(i, j) - Fc.v(i - 1, j)) / gg.hx -
                         (Fc.u(i, j) - Fc.u(i, j - 1)) / gg.hy -
                         kPi * std::cos(kPi * i * gg.hx) * std::sin(kPi * j * gg.hy);
        cs += c * c;
      }
    ec.push_back(std::sqrt(cs * gg.cell_area()));
  }
  const double rg = guarded_rate(hs, eg), rd = guarded_rate(hs, ed), rl = guarded_rate(hs, el),
               rc = guarded_rate(hs, ec);
  if (std::min(std::min(rg, rd), std::min(rl, rc)) < 1.9) r.pass = false;
  r.detail += fmt("orders grad=%.2f div=%.2f lap=%.2f curl=%.2f", rg, rd, rl, rc);
  return r;
}

// ---------------------------------------------------------------------------
// 2. elliptic contracts

CriterionResult c2_elliptic() {
  CriterionResult r{2, "elliptic_contracts", true, ""};
  SolverSettings tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-15;

  std::vector<double> hs, ep_d, ep_n;
  for (int n : {16, 32, 64}) {
    Grid g = make_grid(n, n, 1.0, 1.0, Regime::A);
    hs.push_back(1.0 / n);
    ScalarField fd(g, Loc::Center);
    fd.set_interior([&](int i, int j) {
      return -2 * kPi * kPi * std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j));
    });
    ScalarField xd = solve_poisson(fd, BoundarySpec::dirichlet(1.0), tight).x;
    ScalarField e(g, Loc::Center);
    e.set_interior([&](int i, int j) {
      return xd.at(i, j) - (1.0 + std::sin(kPi * g.xc(i)) * std::sin(kPi * g.yc(j)));
    });
    ep_d.push_back(l2_norm(e));

    ScalarField fn(g, Loc::Center);
    fn.set_interior([&](int i, int j) {
      return -2 * kPi * kPi * std::cos(kPi * g.xc(i)) * std::cos(kPi * g.yc(j));
    });
    ScalarField xn = solve_poisson(fn, BoundarySpec::neumann_zero(), tight).x;
    ScalarField en(g, Loc::Center);
    en.set_interior(
        [&](int i, int j) { return xn.at(i, j) - std::cos(kPi * g.xc(i)) * std::cos(kPi * g.yc(j)); });
    subtract_mean(en);
    ep_n.push_back(l2_norm(en));
  }
  const double rp_d = guarded_rate(hs, ep_d), rp_n = guarded_rate(hs, ep_n);
  if (rp_d < 1.9 || rp_n < 1.9) r.pass = false;

  // variable-viscosity Stokes with psi = [x(1-x)y(1-y)]^2, p = cos(pi x)cos(pi y)
  auto X = [](double x) { return x * x - 2 * x * x * x + x * x * x * x; };
  auto X1 = [](double x) { return 2 * x - 6 * x * x + 4 * x * x * x; };
  auto X2 = [](double x) { return 2 - 12 * x + 12 * x * x; };
  auto X3 = [](double x) { return -12 + 24 * x; };
  auto muf = [](double x, double y) { return 1.0 + 0.5 * x * y; };
  std::vector<double> eu, ep;
  for (int n : {16, 32, 64}) {
    Grid g = make_grid(n, n, 1.0, 1.0, Regime::C);
    ScalarField mu(g, Loc::Center);
    mu.set_interior([&](int i, int j) { return muf(g.xc(i), g.yc(j)); });
    VectorField rhs(g);
    auto force = [&](double x, double y, int c) {
      const double m = muf(x, y), mx = 0.5 * y, my = 0.5 * x;
      const double sh = X(x) * X2(y) - X2(x) * X(y);  // psi_yy - psi_xx
      if (c == 0)
        return -2 * mx * X1(x) * X1(y) - 2 * m * X2(x) * X1(y) - my * sh -
               m * (X(x) * X3(y) - X2(x) * X1(y)) - kPi * std::sin(kPi * x) * std::cos(kPi * y);
      return -mx * sh - m * (X1(x) * X2(y) - X3(x) * X(y)) + 2 * my * X1(x) * X1(y) +
             2 * m * X1(x) * X2(y) - kPi * std::cos(kPi * x) * std::sin(kPi * y);
    };
    rhs.set_u([&](int i, int j) { return force(rhs.xu(i), rhs.yu(j), 0); });
    rhs.set_v([&](int i, int j) { return force(rhs.xv(i), rhs.yv(j), 1); });
    StokesResult sr =
        solve_stokes(mu, rhs, ScalarField(g, Loc::Center), BoundarySpec::no_slip(), tight);
    VectorField ue(g);
    ue.set_u([&](int i, int j) { return sr.u.u(i, j) - X(ue.xu(i)) * X1(ue.yu(j)); });
    ue.set_v([&](int i, int j) { return sr.u.v(i, j) + X1(ue.xv(i)) * X(ue.yv(j)); });
    eu.push_back(l2_norm(ue));
    ScalarField pe(g, Loc::Center);
    pe.set_interior([&](int i, int j) {
      return sr.p.at(i, j) - std::cos(kPi * g.xc(i)) * std::cos(kPi * g.yc(j));
    });
    subtract_mean(pe);
    ep.push_back(l2_norm(pe));
  }
  const double ru = pair_rate(eu[1], eu[2]), rp = pair_rate(ep[1], ep[2]);
  if (ru < 1.9 || rp < 0.9) r.pass = false;

  // Bogovskii: residual, exact zero trace, stable H1 constant
  double worst_res = 0, worst_trace = 0, ratio_min = 1e300, ratio_max = 0;
  for (int n : {16, 32, 64}) {
    Grid g = make_grid(n, n, 1.0, 1.0, Regime::C);
    ScalarField f(g, Loc::Center);
    f.set_interior(
        [&](int i, int j) { return std::cos(kPi * g.xc(i)) * std::cos(kPi * g.yc(j)); });
    subtract_mean(f);
    StokesResult b = bogovskii(f, tight);
    ScalarField res = divergence(b.u);
    axpy(res, -1.0, f);
    worst_res = std::max(worst_res, l2_norm(res));
    for (int j = 0; j < g.ny; ++j) {
      worst_trace = std::max(worst_trace, std::abs(b.u.u(0, j)));
      worst_trace = std::max(worst_trace, std::abs(b.u.u(g.nx, j)));
    }
    for (int i = 0; i < g.nx; ++i) {
      worst_trace = std::max(worst_trace, std::abs(b.u.v(i, 0)));
      worst_trace = std::max(worst_trace, std::abs(b.u.v(i, g.ny)));
    }
    const double ratio = h1_norm(with_bc(b.u, BoundarySpec::no_slip())) / l2_norm(f);
    ratio_min = std::min(ratio_min, ratio);
    ratio_max = std::max(ratio_max, ratio);
  }
  const double drift = ratio_max / ratio_min - 1.0;
  if (worst_res > 1e-8 || worst_trace != 0.0 || drift > 0.2) r.pass = false;
  r.detail = fmt("poisson D/N=%.2f/%.2f stokes u/p=%.2f/%.2f bogovskii res=%.1e drift=%.1f%%",
                 rp_d, rp_n, ru, rp, worst_res, 100 * drift);
  return r;
}

// ---------------------------------------------------------------------------
// 3. maximum principle under randomized small data

CriterionResult c3_max_principle() {
  CriterionResult r{3, "maximum_principle", true, ""};
  double worst = 0;
  for (Regime reg : {Regime::A, Regime::B, Regime::C}) {
    std::mt19937 rng(900 + int(reg));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int run = 0; run < 20; ++run) {
      RunConfig c = base_config(reg, 16);
      c.params.c0 = 0.03 + 0.05 * U(rng);
      c.params.mu = MuLaw{MuLawKind::Constant, 0.02 + 0.06 * U(rng), 0, 0};
      c.ic_amp_u = 0.05 * U(rng);
      c.ic_amp_rho = 0.15 * U(rng);
      if (reg == Regime::A && U(rng) < 0.5) {
        const double b0 = 2.0 * U(rng);
        c.params.friction_b = [b0](double, double) { return b0; };
      }
      c.controls.dt = 5e-4 + 1.5e-3 * U(rng);
      c.t_end = 3 * c.controls.dt;
      bool ok = true;
      double excess = 0;
      StepSink sink = [&](const FluidState& s, const FluidState&, const PicardReport&, double) {
        s.rho.for_interior([&](int, int, double v) {
          excess = std::max(excess, std::max(c.params.alpha - v, v - c.params.beta));
        });
      };
      advance(c.initial_state(), c.t_end, c.controls, c.params, sink);
      ok = excess <= 1e-8;
      worst = std::max(worst, excess);
      if (!ok) r.pass = false;
    }
  }
  r.detail = fmt("60 randomized runs, worst band excursion %.2e (tol 1e-8)", worst);
  return r;
}

// ---------------------------------------------------------------------------
// 4. conservation (A/C) and Dirichlet decay (B)

CriterionResult c4_conservation() {
  CriterionResult r{4, "conservation_decay", true, ""};
  double worst_drift = 0;
  for (Regime reg : {Regime::A, Regime::C}) {
    RunConfig c = base_config(reg, 16);
    FluidState st = c.initial_state();
    const double m0 = mean(st.rho);
    FluidState fin = advance(std::move(st), c.t_end, c.controls, c.params, nullptr);
    const double drift = std::abs(mean(fin.rho) - m0) / c.t_end;
    worst_drift = std::max(worst_drift, drift);
    if (drift > 1e-10) r.pass = false;
  }
  RunConfig cb = base_config(Regime::B, 16);
  FluidState st = cb.initial_state();
  auto dist = [&](const ScalarField& rho) {
    ScalarField d = rho;
    for (int j = 0; j < cb.ny; ++j)
      for (int i = 0; i < cb.nx; ++i) d.at(i, j) -= cb.params.rho_tilde;
    return l2_norm(d);
  };
  double prev = dist(st.rho), worst_slack = 0;
  bool mono = true;
  StepSink sink = [&](const FluidState& s, const FluidState&, const PicardReport&, double) {
    const double cur = dist(s.rho);
    worst_slack = std::min(worst_slack, prev - cur);
    if (cur > prev + 1e-8) mono = false;
    prev = cur;
  };
  advance(std::move(st), cb.t_end, cb.controls, cb.params, sink);
  if (!mono) r.pass = false;
  r.detail = fmt("A/C mean drift %.2e per unit time; B monotone slack %.2e", worst_drift,
                 worst_slack);
  return r;
}

// ---------------------------------------------------------------------------
// 5. divergence-constraint residuals

CriterionResult c5_constraints() {
  CriterionResult r{5, "constraint_residuals", true, ""};
  double worst_res = 0, worst_v = 0, worst_w = 0;
  for (Regime reg : {Regime::A, Regime::B, Regime::C}) {
    RunConfig c = base_config(reg, 16);
    c.t_end = 8 * c.controls.dt;
    SolverSettings tight;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-15;
    StepSink sink = [&](const FluidState& s, const FluidState&, const PicardReport& rep, double) {
      worst_res = std::max(worst_res, rep.constraint_residual);
      if (reg != Regime::C) {
        worst_v = std::max(worst_v, l2_norm(divergence(compute_v(s, c.params))));
      } else {
        VectorField w = s.u;
        axpy(w, -1.0, compute_Q(s, c.params, tight));
        worst_w = std::max(worst_w, l2_norm(divergence(w)));
      }
    };
    advance(c.initial_state(), c.t_end, c.controls, c.params, sink);
  }
  if (worst_res > 1e-7 || worst_v > 1e-7 || worst_w > 1e-7) r.pass = false;
  r.detail = fmt("max |div u - c0 lap(1/rho)|=%.1e, |div v|=%.1e, |div w|=%.1e", worst_res,
                 worst_v, worst_w);
  return r;
}

// ---------------------------------------------------------------------------
// 6. constant-density reduction against an independent projection stepper

// Backward-Euler constant-density step: same discrete equations, solved by
// iterated pressure correction (Chorin-style with Uzawa coupling) instead of
// the Schur-complement solver.
VectorField projection_step(const VectorField& u_old, double dt, const ModelParams& p,
                            const StepControls& ctl) {
  const Grid& g = u_old.grid();
  const BoundarySpec bc = BoundarySpec::no_slip();
  ScalarField mu(g, Loc::Center, p.mu.value(1.0));
  apply_bc(mu, BoundarySpec::neumann_zero());
  SolverSettings lin;
  lin.rel_tol = 1e-13;
  lin.abs_tol = 1e-15;
  const int cap = lin.iter_cap(g);

  VectorField ones(g);
  ones.fill(1.0, 1.0);
  VectorField uwork(g);
  auto apply_A = [&](const detail::DVec& in, detail::DVec& out) {
    detail::unpack(in, uwork);
    apply_bc(uwork, bc, true);
    VectorField visc = viscous_divergence(uwork, mu);
    VectorField Au(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i) Au.u(i, j) = uwork.u(i, j) / dt - visc.u(i, j);
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) Au.v(i, j) = uwork.v(i, j) / dt - visc.v(i, j);
    out = detail::pack(Au);
  };

  VectorField u_k = u_old;
  for (int k = 1; k <= ctl.pic_max; ++k) {
    VectorField advector = with_bc(u_k, bc);
    VectorField adv = advection_term(advector, ones);
    VectorField rhs(g);
    rhs.set_u([&](int i, int j) { return u_old.u(i, j) / dt - adv.u(i, j); });
    rhs.set_v([&](int i, int j) { return u_old.v(i, j) / dt - adv.v(i, j); });
    detail::DVec f = detail::pack(rhs);

    ScalarField pi(g, Loc::Center);
    VectorField u(g);
    detail::DVec udof(f.size(), 0.0);
    bool div_ok = false;
    for (int m = 0; m < 400; ++m) {
      VectorField gp = gradient(pi, BoundarySpec::neumann_zero());
      detail::DVec b = f;
      detail::DVec gpd = detail::pack(gp);
      for (std::size_t q = 0; q < b.size(); ++q) b[q] -= gpd[q];
      SolveReport rep = detail::cg(apply_A, std::move(b), udof, lin, cap);
      if (!rep.converged) throw Error("projection oracle: velocity solve failed");
      detail::unpack(udof, u);
      apply_bc(u, bc, false);
      ScalarField d = divergence(u);
      if (l2_norm(d) <= 1e-12) {
        div_ok = true;
        break;
      }
      subtract_mean(d);
      ScalarField phi = solve_poisson(d, BoundarySpec::neumann_zero(), lin).x;
      axpy(pi, 1.0 / dt, phi);
      subtract_mean(pi);
    }
    if (!div_ok) throw Error("projection oracle: pressure iteration stalled");

    VectorField du = u;
    axpy(du, -1.0, u_k);
    const double delta = l2_norm(du);
    u_k = std::move(u);
    if (delta <= ctl.pic_tol) return u_k;
  }
  throw Error("projection oracle: no Picard convergence");
}

CriterionResult c6_reduction() {
  CriterionResult r{6, "constant_density_reduction", true, ""};
  Grid g = make_grid(16, 16, 1.0, 1.0, Regime::C);
  ModelParams p;
  p.c0 = 0.05;
  p.mu = MuLaw{MuLawKind::Constant, 0.02, 0, 0};
  StepControls ctl;
  ctl.dt = 2e-3;
  ctl.pic_tol = 1e-12;
  ctl.lin.rel_tol = 1e-12;
  ctl.lin.abs_tol = 1e-15;

  ScalarField psi(g, Loc::Center);
  psi.set_interior([&](int i, int j) {
    const double sx = std::sin(kPi * g.xc(i)), sy = std::sin(kPi * g.yc(j));
    return 0.05 * sx * sx * sy * sy;
  });
  FluidState st{0.0, ScalarField(g, Loc::Center, 1.0), perp_gradient(psi),
                ScalarField(g, Loc::Center), ScalarField(g, Loc::Center)};
  apply_bc(st.rho, rho_bc(p, Regime::C));

  double worst = 0;
  for (int step = 0; step < 100; ++step) {
    VectorField u_oracle = projection_step(st.u, ctl.dt, p, ctl);
    auto [next, rep] = picard_step(st, ctl, p);
    VectorField du = next.u;
    axpy(du, -1.0, u_oracle);
    worst = std::max(worst, l2_norm(du));
    st = std::move(next);
  }
  if (worst > 1e-9) r.pass = false;
  r.detail = fmt("100 steps, max per-step difference %.2e (tol 1e-9)", worst);
  return r;
}

// ---------------------------------------------------------------------------
// 7. compatibility initializer round trip

CriterionResult c7_init_round_trip() {
  CriterionResult r{7, "compatibility_round_trip", true, ""};
  ModelParams p;
  p.c0 = 0.05;
  p.alpha = 0.5;
  p.beta = 2.0;
  auto rho_star = [](double x, double y) {
    return 1.0 + 0.3 * std::cos(kPi * x) * std::cos(kPi * y);
  };
  std::vector<double> hs, errs;
  for (int n : {16, 32, 64}) {
    Grid g = make_grid(n, n, 1.0, 1.0, Regime::A);
    hs.push_back(1.0 / n);
    VectorField u0(g);
    auto sgrad = [&](double x, double y, int c) {
      const double rr = rho_star(x, y);
      const double d = c == 0 ? -0.3 * kPi * std::sin(kPi * x) * std::cos(kPi * y)
                              : -0.3 * kPi * std::cos(kPi * x) * std::sin(kPi * y);
      return -d / (rr * rr);
    };
    auto s2 = [](double t) { return std::sin(kPi * t) * std::sin(kPi * t); };
    auto ds2 = [](double t) { return 2 * kPi * std::sin(kPi * t) * std::cos(kPi * t); };
    u0.set_u([&](int i, int j) {
      return p.c0 * sgrad(u0.xu(i), u0.yu(j), 0) + 0.2 * s2(u0.xu(i)) * ds2(u0.yu(j));
    });
    u0.set_v([&](int i, int j) {
      return p.c0 * sgrad(u0.xv(i), u0.yv(j), 1) - 0.2 * ds2(u0.xv(i)) * s2(u0.yv(j));
    });
    double target = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) target += rho_star(g.xc(i), g.yc(j));
    target /= g.nx * g.ny;
    FluidState st = init_from_velocity(u0, p, target);
    ScalarField e(g, Loc::Center);
    e.set_interior([&](int i, int j) { return st.rho.at(i, j) - rho_star(g.xc(i), g.yc(j)); });
    errs.push_back(l2_norm(e));
  }
  const double rate = guarded_rate(hs, errs);
  if (rate < 1.9) r.pass = false;
  r.detail = fmt("density recovery rate %.2f over {16,32,64} (need >= 1.9)", rate);
  return r;
}

// ---------------------------------------------------------------------------
// 8. manufactured-solution convergence

CriterionResult c8_mms() {
  CriterionResult r{8, "manufactured_convergence", true, ""};
  for (const auto& name : manufactured_catalog()) {
    ManufacturedCase mc = manufactured_case(name);
    RateTable sp = convergence_study(mc, StudyKind::Spatial, {16, 32, 64}, 0.02, 2e-3);
    write_file("rates_" + name + "_spatial.csv", sp.csv());
    const double sr = guarded_rate(sp.steps, sp.err_rho);
    const double su = guarded_rate(sp.steps, sp.err_u);
    RateTable tp = convergence_study(mc, StudyKind::Temporal, {16, 16}, 0.02, 5e-3);
    write_file("rates_" + name + "_temporal.csv", tp.csv());
    const double tr = guarded_rate(tp.steps, tp.err_rho);
    const double tu = guarded_rate(tp.steps, tp.err_u);
    bool ok = sr >= 1.9 && su >= 1.9 && tr >= 0.9 && tu >= 0.9;
    if (name == "diffusing_bump_neumann" && guarded_rate(sp.steps, sp.err_pi) < 0.9) ok = false;
    if (!ok) r.pass = false;
    r.detail += fmt("%s sp(rho=%.2f,u=%.2f) tm(rho=%.2f,u=%.2f); ", name.c_str(),
                    std::min(sr, 99.0), su, std::min(tr, 99.0), tu);
  }
  return r;
}

// ---------------------------------------------------------------------------
// 9. Picard contraction

CriterionResult c9_picard() {
  CriterionResult r{9, "picard_contraction", true, ""};
  RunConfig c = base_config(Regime::A, 32);
  c.params.friction_b = [](double, double) { return 0.5; };
  c.controls.dt = 1e-3;
  c.t_end = 5e-3;
  double worst_ratio = 0;
  StepSink sink = [&](const FluidState&, const FluidState&, const PicardReport& rep, double) {
    for (std::size_t k = 2; k < rep.deltas.size(); ++k) {
      if (rep.deltas[k - 1] <= 0) continue;
      worst_ratio = std::max(worst_ratio, rep.deltas[k] / rep.deltas[k - 1]);
    }
  };
  advance(c.initial_state(), c.t_end, c.controls, c.params, sink);
  if (worst_ratio > 0.6) r.pass = false;
  r.detail = fmt("worst delta ratio for k>=2: %.3f (need <= 0.6)", worst_ratio);
  return r;
}

// ---------------------------------------------------------------------------
// 10. Gronwall ledger and the small-vs-large comparative pair

double sup_grad_growth(const RunConfig& c, int steps) {
  FluidState st = c.initial_state();
  const BoundarySpec rbc = rho_bc(c.params, c.regime);
  const double g0 = l2_norm(gradient(st.rho, rbc));
  double sup = g0;
  StepControls ctl = c.controls;
  StepSink sink = [&](const FluidState& s, const FluidState&, const PicardReport&, double) {
    sup = std::max(sup, l2_norm(gradient(s.rho, rbc)));
  };
  advance(std::move(st), steps * ctl.dt, ctl, c.params, sink);
  return sup / g0;
}

CriterionResult c10_ledger() {
  CriterionResult r{10, "gronwall_ledger", true, ""};
  RunConfig c = base_config(Regime::A, 16);
  c.params.friction_b = [](double, double) { return 0.5; };
  c.ic_amp_rho = 0.02;
  c.t_end = 12 * c.controls.dt;
  std::vector<DiagnosticsRecord> recs;
  StepSink sink = [&](const FluidState& s, const FluidState& prev, const PicardReport& rep,
                      double dt) { recs.push_back(energy_record(s, prev, dt, c.params, rep.iterations)); };
  advance(c.initial_state(), c.t_end, c.controls, c.params, sink);
  LedgerReport rep = estimate_ledger(recs, c.params);
  int viol = 0;
  for (const auto& e : rep.entries)
    if (e.name == "eq3.12" || e.name == "eq3.28") viol += e.violations;
  if (viol != 0) r.pass = false;

  RunConfig small = base_config(Regime::C, 32);
  small.ic_amp_u = 0.05;
  small.ic_amp_rho = 0.02;
  small.controls.dt = 1e-3;
  const double growth_small = sup_grad_growth(small, 40);

  RunConfig large = base_config(Regime::C, 32);
  large.params.alpha = 0.05;
  large.params.beta = 20.0;
  large.params.c0 = 0.004;
  large.params.mu = MuLaw{MuLawKind::Constant, 0.02, 0, 0};
  large.ic_amp_u = 3.0;
  large.ic_amp_rho = 0.5;
  large.controls.dt = 1e-3;
  const double growth_large = sup_grad_growth(large, 100);

  if (!(growth_small <= 1.05) || !(growth_large > 2.0)) r.pass = false;
  r.detail = fmt("ledger violations %d; sup|grad rho| growth small %.3f (<=1.05) large %.2f (>2)",
                 viol, growth_small, growth_large);
  return r;
}

// ---------------------------------------------------------------------------
// 11. Serrin monitor sanity

CriterionResult c11_serrin() {
  CriterionResult r{11, "serrin_monitor", true, ""};
  bool reject_ok = true;
  for (auto [rr, ss] : {std::pair{2.0, 8.0}, std::pair{3.0, 3.0}, std::pair{4.0, 0.5}}) {
    try {
      SerrinAccumulator::validate(rr, ss);
      reject_ok = false;
    } catch (const Error&) {
    }
  }
  try {
    SerrinAccumulator::validate(4.0, 4.0);
    SerrinAccumulator::validate(std::numeric_limits<double>::infinity(), 2.0);
  } catch (const Error&) {
    reject_ok = false;
  }

  // frozen fields: accumulation is exactly linear in time
  Grid g = make_grid(12, 12, 1.0, 1.0, Regime::C);
  ModelParams p;
  FluidState st{0.0, ScalarField(g, Loc::Center, 1.0), VectorField(g),
                ScalarField(g, Loc::Center), ScalarField(g, Loc::Center)};
  st.u.set_u([](int, int) { return 0.3; });
  apply_bc(st.rho, rho_bc(p, Regime::C));
  SerrinAccumulator acc = make_serrin(4, 4, SerrinTarget::Velocity);
  const double n4 = lp_norm(st.u, 4.0);
  double prev = 0;
  bool linear_ok = true, monotone_ok = true;
  for (int k = 1; k <= 9; ++k) {
    serrin_accumulate(acc, st, p, 0.01);
    if (acc.integral < prev) monotone_ok = false;
    prev = acc.integral;
    const double expect = std::pow(n4, 4.0) * 0.01 * k;
    if (std::abs(acc.integral - expect) > 1e-12 * (1.0 + expect)) linear_ok = false;
  }
  const bool trip_ok = blowup_monitor(acc, 0.5 * acc.value()).tripped &&
                       !blowup_monitor(acc, 2.0 * acc.value() + 1.0).tripped;
  if (!reject_ok || !linear_ok || !monotone_ok || !trip_ok) r.pass = false;
  r.detail = fmt("validation %s, linearity %s, monotone %s, trip logic %s",
                 reject_ok ? "ok" : "FAIL", linear_ok ? "ok" : "FAIL",
                 monotone_ok ? "ok" : "FAIL", trip_ok ? "ok" : "FAIL");
  return r;
}

// ---------------------------------------------------------------------------
// 12. determinism and checkpoint round trip

CriterionResult c12_determinism() {
  CriterionResult r{12, "determinism_checkpointing", true, ""};
  std::string cfg_text =
      "grid.nx = 16\ngrid.ny = 16\nregime.kind = A\n"
      "model.c0 = 0.05\nmodel.mu_law = affine\nmodel.mu0 = 0.05\nmodel.mu1 = 0.01\n"
      "model.friction = constant\nmodel.b0 = 0.5\n"
      "ic.kind = vortex_bump\nic.amp_u = 0.05\nic.amp_rho = 0.1\n"
      "time.t_end = 0.02\ntime.dt = 2e-3\n";
  std::ostringstream devnull;

  RunConfig c1 = parse_config(cfg_text + "output.csv = det_run_a.csv\n");
  RunConfig c2 = parse_config(cfg_text + "output.csv = det_run_b.csv\n");
  run_from_config(c1, devnull);
  run_from_config(c2, devnull);
  const bool csv_ok = read_file("det_run_a.csv") == read_file("det_run_b.csv");
  std::remove("det_run_a.csv");
  std::remove("det_run_b.csv");
  if (!csv_ok) r.pass = false;

  // save at step 5, continue 10 steps on both paths, compare bit-for-bit
  RunConfig c = parse_config(cfg_text);
  FluidState stA = c.initial_state();
  RunAccumulators accA;
  int steps = 0;
  std::string saved;
  StepSink save_sink = [&](const FluidState& s, const FluidState& prev, const PicardReport&,
                           double dt) {
    serrin_accumulate(accA.serrin_grad_rho, prev, c.params, dt);
    serrin_accumulate(accA.serrin_velocity, prev, c.params, dt);
    ++accA.steps_accepted;
    if (++steps == 5) saved = checkpoint_bytes(c.source_text, s, accA);
  };
  stA = advance(std::move(stA), 5 * c.controls.dt, c.controls, c.params, save_sink);
  StepSink acc_sink = [&](const FluidState& s, const FluidState& prev, const PicardReport&,
                          double dt) {
    serrin_accumulate(accA.serrin_grad_rho, prev, c.params, dt);
    serrin_accumulate(accA.serrin_velocity, prev, c.params, dt);
    ++accA.steps_accepted;
  };
  stA = advance(std::move(stA), 15 * c.controls.dt, c.controls, c.params, acc_sink);

  write_file("det_ckpt.bin", saved);
  FluidState stB = c.initial_state();
  RunAccumulators accB = checkpoint_restore("det_ckpt.bin", c.hash(), stB);
  std::remove("det_ckpt.bin");
  apply_bc(stB.rho, rho_bc(c.params, c.regime));
  StepSink acc_sinkB = [&](const FluidState& s, const FluidState& prev, const PicardReport&,
                           double dt) {
    serrin_accumulate(accB.serrin_grad_rho, prev, c.params, dt);
    serrin_accumulate(accB.serrin_velocity, prev, c.params, dt);
    ++accB.steps_accepted;
  };
  stB = advance(std::move(stB), 15 * c.controls.dt, c.controls, c.params, acc_sinkB);

  const bool bits_ok =
      checkpoint_bytes(c.source_text, stA, accA) == checkpoint_bytes(c.source_text, stB, accB);
  if (!bits_ok) r.pass = false;
  r.detail = fmt("csv byte-identical %s; 10-step resume bit-exact %s", csv_ok ? "yes" : "NO",
                 bits_ok ? "yes" : "NO");
  return r;
}

}  // namespace

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> s = {"operators", "elliptic", "invariants", "mms",
                                             "ledger"};
  return s;
}

std::vector<int> suite_criteria(const std::string& suite) {
  static const std::map<std::string, std::vector<int>> m = {
      {"operators", {1}},
      {"elliptic", {2}},
      {"invariants", {3, 4, 5, 6, 9, 12}},
      {"mms", {7, 8}},
      {"ledger", {10, 11}},
  };
  auto it = m.find(suite);
  if (it == m.end()) throw Error("unknown verify suite '" + suite + "'");
  return it->second;
}

CriterionResult run_criterion(int id) {
  switch (id) {
    case 1: return c1_operators();
    case 2: return c2_elliptic();
    case 3: return c3_max_principle();
    case 4: return c4_conservation();
    case 5: return c5_constraints();
    case 6: return c6_reduction();
    case 7: return c7_init_round_trip();
    case 8: return c8_mms();
    case 9: return c9_picard();
    case 10: return c10_ledger();
    case 11: return c11_serrin();
    case 12: return c12_determinism();
    default: throw Error("unknown criterion id " + std::to_string(id));
  }
}

int verify_suite(const std::string& suite, std::ostream& out) {
  bool all = true;
  for (int id : suite_criteria(suite)) {
    CriterionResult r = run_criterion(id);
    out << "criterion " << r.id << " (" << r.name << "): " << (r.pass ? "PASS" : "FAIL")
        << " [" << r.detail << "]\n";
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

}  // namespace mc
