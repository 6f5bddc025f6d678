#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "machcombust/model.hpp"

// Manufactured solutions. Each catalog case carries closed-form (rho*, u*)
// and the analytic forcings that make them exact solutions of
//   rho_t + div(v rho) - c0 lap(log rho) = f_mass,   v = u - c0 grad(1/rho)
//   rho u_t + rho (u.grad)u - div(2 mu D(u)) + grad(pi) = f_mom
// with constant viscosity (so div(2 mu D(u)) = mu (lap u + grad div u)).

namespace mc {

struct ManufacturedCase {
  std::string name;
  Regime regime = Regime::A;
  ModelParams params;
  double lx = 1, ly = 1;
  std::function<double(double x, double y, double t)> rho_star;
  std::function<double(double x, double y, double t, int comp)> u_star;
  Forcing forcing;

  FluidState initial_state(int nx, int ny) const {
    Grid g = make_grid(nx, ny, lx, ly, regime);
    FluidState st{0.0, ScalarField(g, Loc::Center), VectorField(g), ScalarField(g, Loc::Center),
                  ScalarField(g, Loc::Center)};
    st.rho.set_interior([&](int i, int j) { return rho_star(g.xc(i), g.yc(j), 0.0); });
    apply_bc(st.rho, rho_bc(params, regime));
    st.u.set_u([&](int i, int j) { return u_star(st.u.xu(i), st.u.yu(j), 0.0, 0); });
    st.u.set_v([&](int i, int j) { return u_star(st.u.xv(i), st.u.yv(j), 0.0, 1); });
    return st;
  }
};

namespace detail {

constexpr double kPi = 3.14159265358979323846;

// Partials of a separable density R(x, y, t) up to the third order needed by
// the gradient-flow forcing (u* = c0 grad(1/R), so v* = 0).
struct RhoDerivs {
  double R, Rt, Rx, Ry, Rxx, Ryy, Rxy, Rxxx, Rxyy, Ryxx, Ryyy, Rxt, Ryt;
};

// Forcing for the exact pair (R, u* = c0 grad(1/R)). All sigma = 1/R partials
// follow from the quotient rule; mu must be constant.
inline Forcing gradient_flow_forcing(std::function<RhoDerivs(double, double, double)> rd,
                                     double c0, double mu) {
  Forcing f;
  f.mass = [rd, c0](double x, double y, double t) {
    const RhoDerivs d = rd(x, y, t);
    // v* = 0: f_mass = R_t - c0 lap(log R)
    const double laplog = (d.Rxx + d.Ryy) / d.R - (d.Rx * d.Rx + d.Ry * d.Ry) / (d.R * d.R);
    return d.Rt - c0 * laplog;
  };
  f.mom = [rd, c0, mu](double x, double y, double t, int comp) {
    const RhoDerivs d = rd(x, y, t);
    const double R = d.R, R2 = R * R, R3 = R2 * R, R4 = R2 * R2;
    const double sx = -d.Rx / R2;
    const double sy = -d.Ry / R2;
    const double sxx = 2 * d.Rx * d.Rx / R3 - d.Rxx / R2;
    const double syy = 2 * d.Ry * d.Ry / R3 - d.Ryy / R2;
    const double sxy = 2 * d.Rx * d.Ry / R3 - d.Rxy / R2;
    const double sxxx = -6 * d.Rx * d.Rx * d.Rx / R4 + 6 * d.Rx * d.Rxx / R3 - d.Rxxx / R2;
    const double syyy = -6 * d.Ry * d.Ry * d.Ry / R4 + 6 * d.Ry * d.Ryy / R3 - d.Ryyy / R2;
    const double sxyy = -6 * d.Rx * d.Ry * d.Ry / R4 +
                        2 * (2 * d.Rxy * d.Ry + d.Rx * d.Ryy) / R3 - d.Rxyy / R2;
    const double syxx = -6 * d.Ry * d.Rx * d.Rx / R4 +
                        2 * (2 * d.Rxy * d.Rx + d.Ry * d.Rxx) / R3 - d.Ryxx / R2;
    const double sxt = 2 * d.Rt * d.Rx / R3 - d.Rxt / R2;
    const double syt = 2 * d.Rt * d.Ry / R3 - d.Ryt / R2;
    if (comp == 0) {
      const double ut = c0 * sxt;
      const double adv = c0 * c0 * (sx * sxx + sy * sxy);
      const double visc = 2 * mu * c0 * (sxxx + sxyy);  // lap(u1) + (div u)_x
      return R * ut + R * adv - visc;
    }
    const double ut = c0 * syt;
    const double adv = c0 * c0 * (sx * sxy + sy * syy);
    const double visc = 2 * mu * c0 * (syxx + syyy);
    return R * ut + R * adv - visc;
  };
  return f;
}

}  // namespace detail

inline ManufacturedCase manufactured_case(const std::string& name) {
  using detail::kPi;
  ManufacturedCase mc;
  mc.name = name;
  mc.params.alpha = 0.5;
  mc.params.beta = 2.0;
  mc.params.rho_tilde = 1.0;
  mc.params.c0 = 0.05;
  mc.params.mu = MuLaw{MuLawKind::Constant, 0.05, 0.0, 0.0};

  if (name == "const_density_taylor_green") {
    // regime A with b = 0; constant density, decaying vortex
    mc.regime = Regime::A;
    const double mu = mc.params.mu.mu0;
    mc.rho_star = [](double, double, double) { return 1.0; };
    mc.u_star = [](double x, double y, double t, int comp) {
      const double e = std::exp(-t);
      if (comp == 0) return e * std::sin(kPi * x) * std::cos(kPi * y);
      return -e * std::cos(kPi * x) * std::sin(kPi * y);
    };
    mc.forcing.mass = nullptr;
    mc.forcing.mom = [mu](double x, double y, double t, int comp) {
      const double e = std::exp(-t), e2 = e * e;
      if (comp == 0) {
        const double U = e * std::sin(kPi * x) * std::cos(kPi * y);
        return -U + 0.5 * kPi * e2 * std::sin(2 * kPi * x) + 2 * kPi * kPi * mu * U;
      }
      const double V = -e * std::cos(kPi * x) * std::sin(kPi * y);
      return -V + 0.5 * kPi * e2 * std::sin(2 * kPi * y) + 2 * kPi * kPi * mu * V;
    };
    return mc;
  }

  const double a = 0.2, lam = 1.0;
  if (name == "diffusing_bump_neumann") {
    // regime A with b = 0; rho = 1 + a e^{-lam t} cos(pi x) cos(pi y), u = c0 grad(1/rho)
    mc.regime = Regime::A;
    auto rd = [a, lam](double x, double y, double t) {
      const double A = a * std::exp(-lam * t);
      const double cx = std::cos(kPi * x), sx = std::sin(kPi * x);
      const double cy = std::cos(kPi * y), sy = std::sin(kPi * y);
      detail::RhoDerivs d;
      d.R = 1.0 + A * cx * cy;
      d.Rt = -lam * A * cx * cy;
      d.Rx = -kPi * A * sx * cy;
      d.Ry = -kPi * A * cx * sy;
      d.Rxx = -kPi * kPi * A * cx * cy;
      d.Ryy = d.Rxx;
      d.Rxy = kPi * kPi * A * sx * sy;
      d.Rxxx = kPi * kPi * kPi * A * sx * cy;
      d.Rxyy = d.Rxxx;
      d.Ryyy = kPi * kPi * kPi * A * cx * sy;
      d.Ryxx = d.Ryyy;
      d.Rxt = lam * kPi * A * sx * cy;
      d.Ryt = lam * kPi * A * cx * sy;
      return d;
    };
    const double c0 = mc.params.c0;
    mc.rho_star = [rd](double x, double y, double t) { return rd(x, y, t).R; };
    mc.u_star = [rd, c0](double x, double y, double t, int comp) {
      const detail::RhoDerivs d = rd(x, y, t);
      const double gr = comp == 0 ? d.Rx : d.Ry;
      return -c0 * gr / (d.R * d.R);
    };
    mc.forcing = detail::gradient_flow_forcing(rd, c0, mc.params.mu.mu0);
    return mc;
  }

  if (name == "dirichlet_relax") {
    // regime B; rho = rho_tilde + a e^{-lam t} sin^3(pi x) sin^3(pi y). The
    // profile vanishes to third order at every wall, so the one-sided trace
    // and the Dirichlet ghost extrapolation both stay second-order accurate.
    mc.regime = Regime::B;
    auto rd = [a, lam](double x, double y, double t) {
      const double A = a * std::exp(-lam * t);
      auto S = [](double s) { return std::sin(kPi * s); };
      auto C = [](double s) { return std::cos(kPi * s); };
      auto g0 = [&](double s) { return S(s) * S(s) * S(s); };
      auto g1 = [&](double s) { return 3 * kPi * S(s) * S(s) * C(s); };
      auto g2 = [&](double s) {
        return 3 * kPi * kPi * S(s) * (2 * C(s) * C(s) - S(s) * S(s));
      };
      auto g3 = [&](double s) {
        return 3 * kPi * kPi * kPi * C(s) * (2 * C(s) * C(s) - 7 * S(s) * S(s));
      };
      detail::RhoDerivs d;
      d.R = 1.0 + A * g0(x) * g0(y);
      d.Rt = -lam * A * g0(x) * g0(y);
      d.Rx = A * g1(x) * g0(y);
      d.Ry = A * g0(x) * g1(y);
      d.Rxx = A * g2(x) * g0(y);
      d.Ryy = A * g0(x) * g2(y);
      d.Rxy = A * g1(x) * g1(y);
      d.Rxxx = A * g3(x) * g0(y);
      d.Rxyy = A * g1(x) * g2(y);
      d.Ryxx = A * g2(x) * g1(y);
      d.Ryyy = A * g0(x) * g3(y);
      d.Rxt = -lam * A * g1(x) * g0(y);
      d.Ryt = -lam * A * g0(x) * g1(y);
      return d;
    };
    const double c0 = mc.params.c0;
    mc.rho_star = [rd](double x, double y, double t) { return rd(x, y, t).R; };
    mc.u_star = [rd, c0](double x, double y, double t, int comp) {
      const detail::RhoDerivs d = rd(x, y, t);
      const double gr = comp == 0 ? d.Rx : d.Ry;
      return -c0 * gr / (d.R * d.R);
    };
    mc.forcing = detail::gradient_flow_forcing(rd, c0, mc.params.mu.mu0);
    return mc;
  }

  throw Error("manufactured_case: unknown case '" + name + "'");
}

inline std::vector<std::string> manufactured_catalog() {
  return {"const_density_taylor_green", "diffusing_bump_neumann", "dirichlet_relax"};
}

struct MmsErrors {
  double rho = 0, u = 0, pi = 0;  // exact pressure is zero mean-free for all catalog cases
  std::optional<FluidState> state;
};

// Advance the forced problem from the exact initial state and measure the
// final-time L2 errors against the exact fields.
inline MmsErrors forced_advance(const ManufacturedCase& mc, int nx, int ny, double dt,
                                double t_end, const StepControls& base = {}) {
  StepControls ctl = base;
  ctl.dt = dt;
  FluidState st = mc.initial_state(nx, ny);
  st = advance(std::move(st), t_end, ctl, mc.params, nullptr, &mc.forcing);

  const Grid& g = st.rho.grid();
  MmsErrors out;
  ScalarField er(g, Loc::Center);
  er.set_interior([&](int i, int j) {
    return st.rho.at(i, j) - mc.rho_star(g.xc(i), g.yc(j), st.t);
  });
  out.rho = l2_norm(er);
  VectorField eu(g);
  eu.set_u([&](int i, int j) { return st.u.u(i, j) - mc.u_star(eu.xu(i), eu.yu(j), st.t, 0); });
  eu.set_v([&](int i, int j) { return st.u.v(i, j) - mc.u_star(eu.xv(i), eu.yv(j), st.t, 1); });
  out.u = l2_norm(eu);
  out.pi = l2_norm(st.pi);
  out.state = std::move(st);
  return out;
}

enum class StudyKind { Spatial, Temporal };

struct RateTable {
  std::string case_name;
  StudyKind kind = StudyKind::Spatial;
  std::vector<int> ns;
  std::vector<double> steps;  // h for spatial, dt for temporal
  std::vector<double> err_rho, err_u, err_pi;
  double rate_rho = 0, rate_u = 0, rate_pi = 0;

  std::string csv() const {
    std::string s = "n,step,err_rho,err_u,err_pi\n";
    char buf[160];
    for (std::size_t k = 0; k < steps.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", ns[k], steps[k], err_rho[k],
                    err_u[k], err_pi[k]);
      s += buf;
    }
    std::snprintf(buf, sizeof buf, "# rate_rho=%.4f rate_u=%.4f rate_pi=%.4f\n", rate_rho,
                  rate_u, rate_pi);
    s += buf;
    return s;
  }
};

namespace detail {

inline double ls_rate(const std::vector<double>& step, const std::vector<double>& err) {
  // least-squares slope of log(err) against log(step)
  const std::size_t n = step.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = std::log(step[k]), y = std::log(std::max(err[k], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

// Spatial: errors against the exact solution on refined grids with dt scaled
// by h^2 (the wall ghost closure is O(h) in the wall stress, which couples to
// the 1/dt mass term unless dt shrinks with h^2). Temporal: successive
// differences between runs with halved dt on a fixed grid, isolating the O(dt)
// time error from the fixed spatial error.
inline RateTable convergence_study(const ManufacturedCase& mc, StudyKind kind,
                                   const std::vector<int>& ns, double t_end, double dt0,
                                   const StepControls& base = {}) {
  if (ns.size() < 2) throw Error("convergence_study: need at least two levels");
  RateTable t;
  t.case_name = mc.name;
  t.kind = kind;
  if (kind == StudyKind::Spatial) {
    const int n0 = ns.front();
    for (int n : ns) {
      const double dt = dt0 * double(n0) * n0 / (double(n) * n);
      MmsErrors e = forced_advance(mc, n, n, dt, t_end, base);
      t.ns.push_back(n);
      t.steps.push_back(mc.lx / n);
      t.err_rho.push_back(e.rho);
      t.err_u.push_back(e.u);
      t.err_pi.push_back(e.pi);
    }
  } else {
    const int n = ns.front();
    const int levels = int(ns.size());
    std::vector<MmsErrors> runs;
    double dt = dt0;
    for (int k = 0; k <= levels; ++k, dt *= 0.5)
      runs.push_back(forced_advance(mc, n, n, dt, t_end, base));
    dt = dt0;
    for (int k = 0; k < levels; ++k, dt *= 0.5) {
      ScalarField dr = runs[k].state->rho;
      axpy(dr, -1.0, runs[k + 1].state->rho);
      VectorField du = runs[k].state->u;
      axpy(du, -1.0, runs[k + 1].state->u);
      ScalarField dp = runs[k].state->pi;
      axpy(dp, -1.0, runs[k + 1].state->pi);
      t.ns.push_back(n);
      t.steps.push_back(dt);
      t.err_rho.push_back(l2_norm(dr));
      t.err_u.push_back(l2_norm(du));
      t.err_pi.push_back(l2_norm(dp));
    }
  }
  t.rate_rho = detail::ls_rate(t.steps, t.err_rho);
  t.rate_u = detail::ls_rate(t.steps, t.err_u);
  t.rate_pi = detail::ls_rate(t.steps, t.err_pi);
  return t;
}

}  // namespace mc
