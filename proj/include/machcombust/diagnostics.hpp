#pragma once

#include <algorithm>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "machcombust/model.hpp"

// Per-step analysis quantities: tracked norms, the F/G energy functionals,
// boundary functionals M1/M2, Serrin accumulators, the blowup monitor, and the
// a-priori-estimate ("Gronwall ledger") checks with empirically fitted
// constants. Everything here is a pure function of stored states.

namespace mc {

struct DiagnosticsRecord {
  double t = 0;
  double dt = 0;
  double rho_l2 = 0, grad_rho_l2 = 0, lap_rho_l2 = 0, grad_rho_l4 = 0, rho_t_l2 = 0;
  double u_l2 = 0, v_l2 = 0, grad_v_l2 = 0, sqrt_rho_v_l2 = 0;
  double v_l4 = 0, v_t_l2 = 0, lap_v_l2 = 0;
  double grad_u_l2 = 0, lap_u_l2 = 0, u_t_l2 = 0;
  double grad_lap_rho_l2 = 0, grad_rho_t_l2 = 0;
  double F_t = 0, G_t = 0, M1 = 0, M2 = 0;
  double div_residual = 0;
  double rho_min = 0, rho_max = 0, rho_mean = 0;
  int picard_iters = 0;

  bool finite() const {
    for (double x : {t, dt, rho_l2, grad_rho_l2, lap_rho_l2, grad_rho_l4, rho_t_l2, u_l2, v_l2,
                     grad_v_l2, sqrt_rho_v_l2, v_l4, v_t_l2, lap_v_l2, grad_u_l2, lap_u_l2,
                     u_t_l2, grad_lap_rho_l2, grad_rho_t_l2, F_t, G_t, M1, M2, div_residual,
                     rho_min, rho_max, rho_mean})
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols = {
      "t",           "dt",          "rho_l2",        "grad_rho_l2",     "lap_rho_l2",
      "grad_rho_l4", "rho_t_l2",    "u_l2",          "v_l2",            "grad_v_l2",
      "sqrt_rho_v_l2", "v_l4",      "v_t_l2",        "lap_v_l2",        "grad_u_l2",
      "lap_u_l2",    "u_t_l2",      "grad_lap_rho_l2", "grad_rho_t_l2", "F_t",
      "G_t",         "M1",          "M2",            "div_residual",    "rho_min",
      "rho_max",     "rho_mean",    "picard_iters"};
  return cols;
}

namespace detail {

// Gradient energy over strictly interior differences only; derived fields
// (v, laplacians) have no boundary ghost data, so wall stencils are skipped.
inline double grad_l2_interior(const VectorField& F) {
  const Grid& g = F.grid();
  double s = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double d = (F.u(i + 1, j) - F.u(i, j)) / g.hx;
      s += d * d;
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      const double d = (F.u(i, j) - F.u(i, j - 1)) / g.hy;
      s += d * d;
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      const double d = (F.v(i, j) - F.v(i - 1, j)) / g.hx;
      s += d * d;
    }
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double d = (F.v(i, j + 1) - F.v(i, j)) / g.hy;
      s += d * d;
    }
  return std::sqrt(s * g.cell_area());
}

// Component laplacians at faces with both neighbors interior.
inline double lap_l2_interior(const VectorField& F) {
  const Grid& g = F.grid();
  double s = 0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 2; i < g.nx - 1; ++i) {
      const double d = (F.u(i + 1, j) - 2 * F.u(i, j) + F.u(i - 1, j)) / (g.hx * g.hx) +
                       (F.u(i, j + 1) - 2 * F.u(i, j) + F.u(i, j - 1)) / (g.hy * g.hy);
      s += d * d;
    }
  for (int j = 2; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      const double d = (F.v(i + 1, j) - 2 * F.v(i, j) + F.v(i - 1, j)) / (g.hx * g.hx) +
                       (F.v(i, j + 1) - 2 * F.v(i, j) + F.v(i, j - 1)) / (g.hy * g.hy);
      s += d * d;
    }
  return std::sqrt(s * g.cell_area());
}

}  // namespace detail

// M1 = boundary integral of mu*b*|v.t|^2 (tangential velocity sampled half a
// cell from the wall); M2 = interior integral of c0*mu*b*perp_grad(v.t_w).grad(1/rho)
// with the wall tangent t_w extended constant from the nearest wall,
// specialized to the rectangle. Nonzero only in regime A.
inline std::pair<double, double> boundary_functionals(const FluidState& st,
                                                      const ModelParams& p) {
  const Grid& g = st.rho.grid();
  if (g.bc_regime != Regime::A) return {0.0, 0.0};
  VectorField v = compute_v(st, p);
  auto mu_at = [&](int i, int j) { return p.mu.value(st.rho.at(i, j)); };

  double m1 = 0;
  for (int i = 0; i < g.nx; ++i) {
    const double xb = g.xc(i);
    const double vtb = 0.5 * (v.u(i, 0) + v.u(i + 1, 0));
    const double vtt = 0.5 * (v.u(i, g.ny - 1) + v.u(i + 1, g.ny - 1));
    m1 += mu_at(i, 0) * p.friction(xb, 0.0) * vtb * vtb * g.hx;
    m1 += mu_at(i, g.ny - 1) * p.friction(xb, g.ly) * vtt * vtt * g.hx;
  }
  for (int j = 0; j < g.ny; ++j) {
    const double yb = g.yc(j);
    const double vtl = 0.5 * (v.v(0, j) + v.v(0, j + 1));
    const double vtr = 0.5 * (v.v(g.nx - 1, j) + v.v(g.nx - 1, j + 1));
    m1 += mu_at(0, j) * p.friction(0.0, yb) * vtl * vtl * g.hy;
    m1 += mu_at(g.nx - 1, j) * p.friction(g.lx, yb) * vtr * vtr * g.hy;
  }

  // v.t_w at centers, tangent chosen by the nearest wall
  ScalarField vt(g, Loc::Center);
  vt.set_interior([&](int i, int j) {
    const double x = g.xc(i), y = g.yc(j);
    const double dx = std::min(x, g.lx - x), dy = std::min(y, g.ly - y);
    if (dy <= dx) return 0.5 * (v.u(i, j) + v.u(i + 1, j));   // horizontal walls: t = x-hat
    return 0.5 * (v.v(i, j) + v.v(i, j + 1));                 // vertical walls:  t = y-hat
  });
  VectorField pg = perp_gradient(vt);
  const Regime r = g.bc_regime;
  ScalarField sig = sigma_field(st.rho, p, r);
  VectorField gs = gradient(sig, sigma_bc(p, r));
  double m2 = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double dot = 0.5 * (pg.u(i, j) + pg.u(i + 1, j)) * 0.5 * (gs.u(i, j) + gs.u(i + 1, j)) +
                         0.5 * (pg.v(i, j) + pg.v(i, j + 1)) * 0.5 * (gs.v(i, j) + gs.v(i, j + 1));
      m2 += p.c0 * mu_at(i, j) * p.friction(g.xc(i), g.yc(j)) * dot * g.cell_area();
    }
  return {m1, m2};
}

inline DiagnosticsRecord energy_record(const FluidState& st, const FluidState& prev, double dt,
                                       const ModelParams& p, int picard_iters = 0) {
  const Grid& g = st.rho.grid();
  if (!g.same_as(prev.rho.grid())) throw Error("energy_record: grid mismatch");
  const Regime r = g.bc_regime;
  const BoundarySpec rbc = rho_bc(p, r);
  const BoundarySpec diff_bc =
      r == Regime::B ? BoundarySpec::dirichlet(0.0) : BoundarySpec::neumann_zero();

  DiagnosticsRecord rec;
  rec.t = st.t;
  rec.dt = dt;
  rec.picard_iters = picard_iters;

  rec.rho_l2 = l2_norm(st.rho);
  VectorField grho = gradient(st.rho, rbc);
  rec.grad_rho_l2 = l2_norm(grho);
  rec.grad_rho_l4 = lp_norm(grho, 4.0);
  ScalarField laprho = laplacian(st.rho, rbc);
  rec.lap_rho_l2 = l2_norm(laprho);
  rec.grad_lap_rho_l2 = l2_norm(gradient(laprho, BoundarySpec::neumann_zero()));

  ScalarField rho_t = st.rho;
  axpy(rho_t, -1.0, prev.rho);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) rho_t.at(i, j) /= dt;
  rec.rho_t_l2 = l2_norm(rho_t);
  rec.grad_rho_t_l2 = l2_norm(gradient(rho_t, diff_bc));

  rec.u_l2 = l2_norm(st.u);
  VectorField v = compute_v(st, p);
  rec.v_l2 = l2_norm(v);
  rec.v_l4 = lp_norm(v, 4.0);
  rec.grad_v_l2 = detail::grad_l2_interior(v);
  rec.lap_v_l2 = detail::lap_l2_interior(v);
  rec.grad_u_l2 = detail::grad_l2_interior(st.u);
  rec.lap_u_l2 = detail::lap_l2_interior(st.u);

  VectorField v_prev = compute_v(prev, p);
  VectorField vt = v;
  axpy(vt, -1.0, v_prev);
  scale(vt, 1.0 / dt);
  rec.v_t_l2 = l2_norm(vt);
  VectorField ut = st.u;
  axpy(ut, -1.0, prev.u);
  scale(ut, 1.0 / dt);
  rec.u_t_l2 = l2_norm(ut);

  VectorField srv = v;
  const Grid& gg = g;
  ScalarField rg = with_bc(st.rho, rbc);
  for (int j = 0; j < gg.ny; ++j)
    for (int i = 0; i <= gg.nx; ++i)
      srv.u(i, j) *= std::sqrt(0.5 * (rg.at(i - 1, j) + rg.at(i, j)));
  for (int j = 0; j <= gg.ny; ++j)
    for (int i = 0; i < gg.nx; ++i)
      srv.v(i, j) *= std::sqrt(0.5 * (rg.at(i, j - 1) + rg.at(i, j)));
  rec.sqrt_rho_v_l2 = l2_norm(srv);

  rec.F_t = rec.grad_v_l2 * rec.grad_v_l2 + rec.lap_rho_l2 * rec.lap_rho_l2 +
            rec.rho_t_l2 * rec.rho_t_l2;
  rec.G_t = rec.lap_v_l2 * rec.lap_v_l2 + rec.v_t_l2 * rec.v_t_l2 +
            rec.grad_lap_rho_l2 * rec.grad_lap_rho_l2 + rec.grad_rho_t_l2 * rec.grad_rho_t_l2;

  auto [m1, m2] = boundary_functionals(st, p);
  rec.M1 = m1;
  rec.M2 = m2;

  rec.div_residual = residual_divergence_constraint(st, p);
  rec.rho_min = st.rho.at(0, 0);
  rec.rho_max = rec.rho_min;
  double acc = 0;
  int n = 0;
  st.rho.for_interior([&](int, int, double x) {
    rec.rho_min = std::min(rec.rho_min, x);
    rec.rho_max = std::max(rec.rho_max, x);
    acc += x;
    ++n;
  });
  rec.rho_mean = acc / n;
  return rec;
}

inline std::string csv_header() {
  std::string s;
  const auto& cols = diagnostics_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (k) s += ',';
    s += cols[k];
  }
  s += '\n';
  return s;
}

inline std::string csv_row(const DiagnosticsRecord& r) {
  const double vals[] = {r.t,          r.dt,          r.rho_l2,         r.grad_rho_l2,
                         r.lap_rho_l2, r.grad_rho_l4, r.rho_t_l2,       r.u_l2,
                         r.v_l2,       r.grad_v_l2,   r.sqrt_rho_v_l2,  r.v_l4,
                         r.v_t_l2,     r.lap_v_l2,    r.grad_u_l2,      r.lap_u_l2,
                         r.u_t_l2,     r.grad_lap_rho_l2, r.grad_rho_t_l2, r.F_t,
                         r.G_t,        r.M1,          r.M2,             r.div_residual,
                         r.rho_min,    r.rho_max,     r.rho_mean};
  std::string s;
  char buf[40];
  for (double v : vals) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    s += buf;
    s += ',';
  }
  std::snprintf(buf, sizeof buf, "%d", r.picard_iters);
  s += buf;
  s += '\n';
  return s;
}

// ---------------------------------------------------------------------------
// Serrin accumulators and the blowup monitor

enum class SerrinTarget { GradRho, Velocity };

struct SerrinAccumulator {
  double r = 4, s = 4;
  SerrinTarget target = SerrinTarget::GradRho;
  double integral = 0;  // sum of |f(t_k)|_r^s * dt_k (left endpoint)
  double sup = 0;       // used when s = inf

  static void validate(double r, double s) {
    if (!(r > 2)) throw Error("serrin: need 2 < r <= inf");
    if (!(s >= 1)) throw Error("serrin: need s >= 1");
    const double a = std::isinf(s) ? 0.0 : 2.0 / s;
    const double b = std::isinf(r) ? 0.0 : 2.0 / r;
    if (a + b > 1.0 + 1e-15) throw Error("serrin: exponents violate 2/s + 2/r <= 1");
  }

  double value() const {
    return std::isinf(s) ? sup : std::pow(integral, 1.0 / s);
  }
};

inline SerrinAccumulator make_serrin(double r, double s, SerrinTarget t) {
  SerrinAccumulator::validate(r, s);
  SerrinAccumulator a;
  a.r = r;
  a.s = s;
  a.target = t;
  return a;
}

// Left-endpoint accumulation over [t, t+dt): uses the state at the interval
// start, so the accumulator is non-decreasing and exact for frozen fields.
inline void serrin_accumulate(SerrinAccumulator& acc, const FluidState& at_start,
                              const ModelParams& p, double dt) {
  double nrm = 0;
  if (acc.target == SerrinTarget::GradRho) {
    const BoundarySpec rbc = rho_bc(p, at_start.rho.grid().bc_regime);
    nrm = lp_norm(gradient(at_start.rho, rbc), acc.r);
  } else {
    nrm = lp_norm(at_start.u, acc.r);
  }
  if (std::isinf(acc.s))
    acc.sup = std::max(acc.sup, nrm);
  else
    acc.integral += std::pow(nrm, acc.s) * dt;
}

struct BlowupStatus {
  double value = 0;
  double threshold = 0;
  bool tripped = false;
  SerrinTarget which = SerrinTarget::GradRho;
};

inline BlowupStatus blowup_monitor(const SerrinAccumulator& acc, double threshold) {
  BlowupStatus st;
  st.value = acc.value();
  st.threshold = threshold;
  st.tripped = st.value >= threshold;
  st.which = acc.target;
  return st;
}

// ---------------------------------------------------------------------------
// Gronwall ledger

struct LedgerEntry {
  std::string name;
  double nu = 0;
  double fitted_C = 0;
  double min_slack = 0;
  int violations = 0;
  std::vector<int> violating_steps;
};

struct LedgerReport {
  std::vector<LedgerEntry> entries;
  int total_violations() const {
    int n = 0;
    for (const auto& e : entries) n += e.violations;
    return n;
  }
};

namespace detail {

// Robust envelope fit: C is the max observed ratio, capped at
// max(100, 10 * median); steps whose ratio escapes the cap become violations.
inline LedgerEntry fit_ledger(const std::string& name, double nu,
                              const std::vector<double>& lhs, const std::vector<double>& rhs,
                              double slack_tol = 1e-6) {
  LedgerEntry e;
  e.name = name;
  e.nu = nu;
  std::vector<double> ratios;
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    if (lhs[k] <= 0)
      ratios.push_back(0.0);  // inequality holds with any C; keeps the median honest
    else if (rhs[k] > 1e-14)
      ratios.push_back(lhs[k] / rhs[k]);
  }
  double cap = 0;
  if (!ratios.empty()) {
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double med = sorted[sorted.size() / 2];
    // a lone extreme ratio must not set its own envelope
    cap = std::min(sorted.back(), std::max(100.0, 10 * med));
  }
  e.fitted_C = cap;
  e.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    const double slack = e.fitted_C * rhs[k] - lhs[k];
    e.min_slack = std::min(e.min_slack, slack);
    if (slack < -slack_tol) {
      ++e.violations;
      e.violating_steps.push_back(int(k));
    }
  }
  if (lhs.empty()) e.min_slack = 0;
  return e;
}

}  // namespace detail

// Discrete analogs checked, with backward differences over consecutive records:
//   eq (3.12):  d/dt|grad rho|^2 + nu1*|lap rho|^2
//                 <= C (|grad rho|^2 |lap rho|^2 + |v|_4^4 |grad rho|^2)
//   eq (3.28):  d/dt|sqrt(rho) v|^2 + nu2*|grad v|^2
//                 <= C (|grad rho|_4^4 + |lap rho|^2)(1 + |sqrt(rho) v|^2)
//   case C (F/G): d/dt F + nu3*G <= C (|grad u|^4 + |lap rho|^4 + |lap rho|^2) F
// nu1 = c0/(2 beta) is the dissipation coefficient the estimate produces;
// nu2, nu3 are conservative fractions of the viscosity floor. The constant C
// is not explicit in the analysis, so it is fitted per run; outliers beyond
// the robust envelope count as violations.
inline LedgerReport estimate_ledger(const std::vector<DiagnosticsRecord>& recs,
                                    const ModelParams& p) {
  LedgerReport rep;
  if (recs.size() < 2) {
    rep.entries.push_back({"eq3.12", 0, 0, 0, 0, {}});
    rep.entries.push_back({"eq3.28", 0, 0, 0, 0, {}});
    rep.entries.push_back({"caseC_FG", 0, 0, 0, 0, {}});
    return rep;
  }
  double mu_min = std::numeric_limits<double>::infinity();
  for (double sden : {p.alpha, p.beta, 0.5 * (p.alpha + p.beta)})
    mu_min = std::min(mu_min, p.mu.value(sden));
  const double nu1 = p.c0 / (2 * p.beta);
  const double nu2 = 0.5 * mu_min;
  const double nu3 = 0.25 * std::min(mu_min, p.c0 / p.beta);

  std::vector<double> l1, r1, l2, r2, l3, r3;
  auto Ffun = [](const DiagnosticsRecord& r) {
    return r.grad_u_l2 * r.grad_u_l2 + r.rho_t_l2 * r.rho_t_l2 + r.lap_rho_l2 * r.lap_rho_l2;
  };
  auto Gfun = [](const DiagnosticsRecord& r) {
    return r.u_t_l2 * r.u_t_l2 + r.lap_u_l2 * r.lap_u_l2 +
           r.grad_lap_rho_l2 * r.grad_lap_rho_l2 + r.grad_rho_t_l2 * r.grad_rho_t_l2;
  };
  for (std::size_t k = 1; k < recs.size(); ++k) {
    const auto& a = recs[k - 1];
    const auto& b = recs[k];
    const double dt = b.dt;
    const double g2b = b.grad_rho_l2 * b.grad_rho_l2, g2a = a.grad_rho_l2 * a.grad_rho_l2;
    const double lap2 = b.lap_rho_l2 * b.lap_rho_l2;
    l1.push_back((g2b - g2a) / dt + nu1 * lap2);
    r1.push_back(g2b * lap2 + std::pow(b.v_l4, 4) * g2b);

    const double s2b = b.sqrt_rho_v_l2 * b.sqrt_rho_v_l2;
    const double s2a = a.sqrt_rho_v_l2 * a.sqrt_rho_v_l2;
    l2.push_back((s2b - s2a) / dt + nu2 * b.grad_v_l2 * b.grad_v_l2);
    r2.push_back((std::pow(b.grad_rho_l4, 4) + lap2) * (1.0 + s2b));

    l3.push_back((Ffun(b) - Ffun(a)) / dt + nu3 * Gfun(b));
    r3.push_back((std::pow(b.grad_u_l2, 4) + std::pow(b.lap_rho_l2, 4) + lap2) * Ffun(b));
  }
  rep.entries.push_back(detail::fit_ledger("eq3.12", nu1, l1, r1));
  rep.entries.push_back(detail::fit_ledger("eq3.28", nu2, l2, r2));
  rep.entries.push_back(detail::fit_ledger("caseC_FG", nu3, l3, r3));
  return rep;
}

}  // namespace mc
