#pragma once

#include <optional>
#include <utility>

#include "machcombust/elliptic.hpp"

// The low-Mach combustion model on the staggered grid. State is (rho, u, pi);
// the constraint div u = c0*lap(1/rho) is enforced inside the momentum solve
// through its divergence target. One time step is a Picard loop that freezes
// the advector Phi = v^{k-1} and the diffusivity density phi = rho^{k-1},
// advances the mass equation, then solves a generalized Stokes problem for
// (u, pi). Regimes: A slip-with-friction, B constant boundary density with
// u = c0*grad(1/rho) trace, C no-slip.

namespace mc {

enum class MuLawKind { Constant, Affine, Exp };

struct MuLaw {
  MuLawKind kind = MuLawKind::Constant;
  double mu0 = 1.0;
  double mu1 = 0.0;  // affine slope
  double k = 0.0;    // exp rate

  double value(double rho) const {
    switch (kind) {
      case MuLawKind::Constant: return mu0;
      case MuLawKind::Affine: return mu0 + mu1 * rho;
      default: return mu0 * std::exp(k * rho);
    }
  }
  double deriv(double rho) const {
    switch (kind) {
      case MuLawKind::Constant: return 0.0;
      case MuLawKind::Affine: return mu1;
      default: return mu0 * k * std::exp(k * rho);
    }
  }
};

struct ModelParams {
  double c0 = 0.1;
  MuLaw mu;
  double alpha = 0.5, beta = 2.0;  // admissible density band
  double rho_tilde = 1.0;          // regime-B boundary density
  std::function<double(double, double)> friction_b;  // regime A; null: b == 0

  double friction(double x, double y) const { return friction_b ? friction_b(x, y) : 0.0; }

  void validate() const {
    if (!(c0 > 0)) throw Error("params: c0 must be positive");
    if (!(0 < alpha && alpha <= beta)) throw Error("params: need 0 < alpha <= beta");
    if (!(alpha <= rho_tilde && rho_tilde <= beta))
      throw Error("params: need alpha <= rho_tilde <= beta");
    for (double s : {alpha, beta})
      if (!(mu.value(s) > 0)) throw Error("params: viscosity law not positive on [alpha, beta]");
  }
};

// Source terms of the manufactured-solution machinery; null members mean zero.
struct Forcing {
  std::function<double(double x, double y, double t)> mass;
  std::function<double(double x, double y, double t, int comp)> mom;
};

struct StepControls {
  double dt = 1e-3;
  double pic_tol = 1e-9;
  int pic_max = 50;
  double constraint_tol = 1e-7;
  int max_halvings = 10;
  SolverSettings lin;
};

struct PicardReport {
  int iterations = 0;
  std::vector<double> deltas;  // delta_k = |rho^k - rho^{k-1}|_{H1,h} + |u^k - u^{k-1}|_2
  bool converged = false;
  double constraint_residual = 0;
};

struct FluidState {
  double t = 0;
  ScalarField rho;
  VectorField u;
  ScalarField pi;   // mean-free pressure
  ScalarField pi1;  // modified pressure pi - c0*(log rho)_t, mean-free
};

// ---------------------------------------------------------------------------
// Boundary data derived from the regime

inline BoundarySpec rho_bc(const ModelParams& p, Regime r) {
  return r == Regime::B ? BoundarySpec::dirichlet(p.rho_tilde) : BoundarySpec::neumann_zero();
}
inline BoundarySpec sigma_bc(const ModelParams& p, Regime r) {
  return r == Regime::B ? BoundarySpec::dirichlet(1.0 / p.rho_tilde)
                        : BoundarySpec::neumann_zero();
}

// sigma = 1/rho with regime-consistent ghosts
inline ScalarField sigma_field(const ScalarField& rho, const ModelParams& p, Regime r) {
  ScalarField s(rho.grid(), Loc::Center);
  s.set_interior([&](int i, int j) {
    const double v = rho.at(i, j);
    if (!(v > 0)) throw Error("sigma_field: density must stay positive");
    return 1.0 / v;
  });
  apply_bc(s, sigma_bc(p, r));
  return s;
}

// Velocity boundary condition. Regime B's trace u = c0*grad(1/rho) is sampled
// with the same one-sided differences the laplacian stencil uses, so the
// divergence target and the boundary flux are compatible to roundoff.
inline BoundarySpec velocity_bc(const ModelParams& p, Regime r, const ScalarField& sigma) {
  switch (r) {
    case Regime::A:
      return BoundarySpec::slip_friction([p](double x, double y) { return p.friction(x, y); });
    case Regime::C:
      return BoundarySpec::no_slip();
    default: {
      const Grid g = sigma.grid();
      const double c0 = p.c0, st = 1.0 / p.rho_tilde;
      ScalarField s = sigma;  // captured by value
      auto clampi = [](int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
      return BoundarySpec::velocity_profile([g, c0, st, s, clampi](double x, double y, int comp) {
        if (comp == 0) {
          const int j = clampi(int(std::llround(y / g.hy - 0.5)), g.ny);
          if (x == 0.0) return c0 * 2.0 * (s.at(0, j) - st) / g.hx;
          if (x == g.lx) return c0 * 2.0 * (st - s.at(g.nx - 1, j)) / g.hx;
          return 0.0;  // tangential trace on bottom/top walls
        }
        const int i = clampi(int(std::llround(x / g.hx - 0.5)), g.nx);
        if (y == 0.0) return c0 * 2.0 * (s.at(i, 0) - st) / g.hy;
        if (y == g.ly) return c0 * 2.0 * (st - s.at(i, g.ny - 1)) / g.hy;
        return 0.0;
      });
    }
  }
}

inline VectorField compute_v(const FluidState& st, const ModelParams& p) {
  const Regime r = st.rho.grid().bc_regime;
  ScalarField sig = sigma_field(st.rho, p, r);
  VectorField v = st.u;
  VectorField gs = gradient(sig, sigma_bc(p, r));
  axpy(v, -p.c0, gs);
  return v;
}

inline VectorField compute_Q(const FluidState& st, const ModelParams& p,
                             const SolverSettings& s = {}) {
  const Regime r = st.rho.grid().bc_regime;
  ScalarField sig = sigma_field(st.rho, p, r);
  ScalarField rhs = laplacian(sig, sigma_bc(p, r));
  for (int j = 0; j < rhs.jsize(); ++j)
    for (int i = 0; i < rhs.isize(); ++i) rhs.at(i, j) *= p.c0;
  return bogovskii(rhs, s).u;
}

inline double residual_divergence_constraint(const FluidState& st, const ModelParams& p) {
  const Regime r = st.rho.grid().bc_regime;
  ScalarField sig = sigma_field(st.rho, p, r);
  ScalarField res = divergence(st.u);
  ScalarField lap = laplacian(sig, sigma_bc(p, r));
  for (int j = 0; j < res.jsize(); ++j)
    for (int i = 0; i < res.isize(); ++i) res.at(i, j) -= p.c0 * lap.at(i, j);
  return l2_norm(res);
}

// ---------------------------------------------------------------------------
// Compatibility initializer: rho0 from div u0 = c0*lap(1/rho0)

inline FluidState init_from_velocity(const VectorField& u0, const ModelParams& p,
                                     double mean_rho, const SolverSettings& s = {}) {
  p.validate();
  const Grid& g = u0.grid();
  const Regime r = g.bc_regime;
  ScalarField d = divergence(u0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) d.at(i, j) /= p.c0;

  ScalarField sig(g, Loc::Center);
  if (r == Regime::B) {
    sig = solve_poisson(d, BoundarySpec::dirichlet(1.0 / p.rho_tilde), s).x;
  } else {
    if (std::abs(mean(d) * g.lx * g.ly) > 1e-9 * (1.0 + l2_norm(d)))
      throw Error("init_from_velocity: u0 has net boundary flux (incompatible data)");
    subtract_mean(d);
    ScalarField sig0 = solve_poisson(d, BoundarySpec::neumann_zero(), s).x;
    // shift sigma so the density mean matches; mean(1/(sig0+shift)) is
    // strictly decreasing in the shift, so bisection is safe
    double lo = 0, hi = 0;
    double smin = sig0.at(0, 0);
    sig0.for_interior([&](int, int, double v) { smin = std::min(smin, v); });
    lo = -smin + 1e-12 * (1.0 + std::abs(smin));
    auto mean_rho_of = [&](double sh) {
      double acc = 0;
      int n = 0;
      sig0.for_interior([&](int, int, double v) {
        acc += 1.0 / (v + sh);
        ++n;
      });
      return acc / n;
    };
    if (!(mean_rho_of(lo) > mean_rho))
      throw Error("init_from_velocity: requested density mean unreachable");
    hi = std::max(1.0, 1.0 / mean_rho - smin);
    while (mean_rho_of(hi) > mean_rho) hi *= 2;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mean_rho_of(mid) > mean_rho ? lo : hi) = mid;
    }
    const double shift = 0.5 * (lo + hi);
    sig = sig0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) sig.at(i, j) += shift;
  }

  FluidState st{0.0, ScalarField(g, Loc::Center), u0, ScalarField(g, Loc::Center),
                ScalarField(g, Loc::Center)};
  st.rho.set_interior([&](int i, int j) {
    const double sv = sig.at(i, j);
    if (!(sv > 0)) throw Error("init_from_velocity: nonpositive density");
    return 1.0 / sv;
  });
  double rmin = p.beta, rmax = p.alpha;
  st.rho.for_interior([&](int, int, double v) {
    rmin = std::min(rmin, v);
    rmax = std::max(rmax, v);
  });
  if (rmin < p.alpha - 1e-12 || rmax > p.beta + 1e-12)
    throw Error("init_from_velocity: initial density escapes [alpha, beta]");
  apply_bc(st.rho, rho_bc(p, r));
  return st;
}

// ---------------------------------------------------------------------------
// Linearized sub-steps

// Mass equation with frozen advector Phi (= v^{k-1}, discretely div-free) and
// frozen diffusivity density phi. Regimes A/C advance rho in conservative flux
// form (central face averages; diffusion div(c0/phi grad rho)), which keeps
// the cell mean exact and the L2 norm non-increasing. Regime B advances
// L = log rho:  L/dt + Phi.grad L - (c0/phi) lap L = L_old/dt + f/phi  with
// Dirichlet data log(rho_tilde), then exponentiates.
inline ScalarField mass_step_linearized(const ScalarField& rho_old, const VectorField& Phi,
                                        const ScalarField& phi, double dt, Regime regime,
                                        const ModelParams& p, const StepControls& ctl,
                                        const Forcing* forcing = nullptr, double t_new = 0) {
  const Grid& g = rho_old.grid();
  if (!(dt > 0)) throw Error("mass_step: dt must be positive");
  ScalarField phig = with_bc(phi, rho_bc(p, regime));

  const bool logform = regime == Regime::B;
  const BoundarySpec bc =
      logform ? BoundarySpec::dirichlet(std::log(p.rho_tilde)) : BoundarySpec::neumann_zero();
  const BoundarySpec bc_hom = logform ? BoundarySpec::dirichlet(0.0) : bc;

  ScalarField work(g, Loc::Center);
  auto apply_op = [&](const ScalarField& fin, const BoundarySpec& fbc) {
    ScalarField f = with_bc(fin, fbc);
    ScalarField out(g, Loc::Center);
    if (!logform) {
      // conservative: div(Phi * avg(f)) - div((c0/phi)_face grad f)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          auto fx = [&](int ii) {
            const double adv = Phi.u(ii, j) * 0.5 * (f.at(ii - 1, j) + f.at(ii, j));
            const double dcoef = p.c0 * 0.5 * (1.0 / phig.at(ii - 1, j) + 1.0 / phig.at(ii, j));
            return adv - dcoef * (f.at(ii, j) - f.at(ii - 1, j)) / g.hx;
          };
          auto fy = [&](int jj) {
            const double adv = Phi.v(i, jj) * 0.5 * (f.at(i, jj - 1) + f.at(i, jj));
            const double dcoef = p.c0 * 0.5 * (1.0 / phig.at(i, jj - 1) + 1.0 / phig.at(i, jj));
            return adv - dcoef * (f.at(i, jj) - f.at(i, jj - 1)) / g.hy;
          };
          out.at(i, j) = f.at(i, j) / dt + (fx(i + 1) - fx(i)) / g.hx + (fy(j + 1) - fy(j)) / g.hy;
        }
    } else {
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double px = 0.5 * (Phi.u(i, j) + Phi.u(i + 1, j));
          const double py = 0.5 * (Phi.v(i, j) + Phi.v(i, j + 1));
          const double adv = px * (f.at(i + 1, j) - f.at(i - 1, j)) / (2 * g.hx) +
                             py * (f.at(i, j + 1) - f.at(i, j - 1)) / (2 * g.hy);
          const double lap =
              (f.at(i + 1, j) - 2 * f.at(i, j) + f.at(i - 1, j)) / (g.hx * g.hx) +
              (f.at(i, j + 1) - 2 * f.at(i, j) + f.at(i, j - 1)) / (g.hy * g.hy);
          out.at(i, j) = f.at(i, j) / dt + adv - (p.c0 / phig.at(i, j)) * lap;
        }
    }
    return out;
  };

  ScalarField old_var(g, Loc::Center);
  if (logform)
    old_var.set_interior([&](int i, int j) { return std::log(rho_old.at(i, j)); });
  else
    old_var.set_interior([&](int i, int j) { return rho_old.at(i, j); });

  ScalarField rhs(g, Loc::Center);
  rhs.set_interior([&](int i, int j) {
    double v = old_var.at(i, j) / dt;
    if (forcing && forcing->mass) {
      const double fm = forcing->mass(g.xc(i), g.yc(j), t_new);
      v += logform ? fm / phig.at(i, j) : fm;
    }
    return v;
  });
  if (logform) {  // move the affine Dirichlet contribution to the rhs
    ScalarField zero(g, Loc::Center);
    ScalarField a0 = apply_op(zero, bc);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) rhs.at(i, j) -= a0.at(i, j);
  }

  auto apply = [&](const detail::DVec& in, detail::DVec& out) {
    detail::unpack(in, work);
    ScalarField r = apply_op(work, bc_hom);
    out = detail::pack(r);
  };
  detail::DVec x = detail::pack(old_var);
  SolveReport rep = detail::bicgstab(apply, detail::pack(rhs), x, ctl.lin, ctl.lin.iter_cap(g));
  if (!rep.converged) throw Error("mass_step: linear solve failed to converge");

  ScalarField rho_new(g, Loc::Center);
  detail::unpack(x, rho_new);
  if (logform) {
    rho_new.set_interior([&](int i, int j) { return std::exp(rho_new.at(i, j)); });
  } else {
    // exact mean restoration (constant shift at solver-tolerance magnitude)
    double target = mean(rho_old);
    if (forcing && forcing->mass) {
      double fm = 0;
      int n = 0;
      rho_new.for_interior([&](int i, int j, double) {
        fm += forcing->mass(g.xc(i), g.yc(j), t_new);
        ++n;
      });
      target += dt * fm / n;
    }
    const double shift = target - mean(rho_new);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) rho_new.at(i, j) += shift;
  }
  if (!rho_new.all_finite()) throw Error("mass_step: non-finite density");
  const double band = 10 * ctl.pic_tol;
  double rmin = rho_new.at(0, 0), rmax = rmin;
  rho_new.for_interior([&](int, int, double v) {
    rmin = std::min(rmin, v);
    rmax = std::max(rmax, v);
  });
  if (rmin < p.alpha - band || rmax > p.beta + band)
    throw Error("mass_step: density escaped [alpha, beta] band (step rejected)");
  apply_bc(rho_new, rho_bc(p, regime));
  return rho_new;
}

// Momentum advection rho*(a . grad a) at faces, central differences; the
// advector `a` must carry valid boundary ghosts.
inline VectorField advection_term(const VectorField& a, const VectorField& rho_face) {
  const Grid& g = a.grid();
  VectorField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      const double du_dx = (a.u(i + 1, j) - a.u(i - 1, j)) / (2 * g.hx);
      const double du_dy = (a.u(i, j + 1) - a.u(i, j - 1)) / (2 * g.hy);
      out.u(i, j) = rho_face.u(i, j) * (a.u(i, j) * du_dx + v_at_u(a, i, j) * du_dy);
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double dv_dx = (a.v(i + 1, j) - a.v(i - 1, j)) / (2 * g.hx);
      const double dv_dy = (a.v(i, j + 1) - a.v(i, j - 1)) / (2 * g.hy);
      out.v(i, j) = rho_face.v(i, j) * (u_at_v(a, i, j) * dv_dx + a.v(i, j) * dv_dy);
    }
  return out;
}

// Backward-Euler momentum solve at the new density, advection frozen at the
// previous Picard iterate. Returns (u, pi); the constraint div u = c0*lap(1/rho)
// enters as the divergence target of the Stokes solve.
inline std::pair<VectorField, ScalarField> momentum_step_linearized(
    const VectorField& u_old, const ScalarField& rho_new, const VectorField& advector,
    double dt, Regime regime, const ModelParams& p, const StepControls& ctl,
    const Forcing* forcing = nullptr, double t_new = 0) {
  const Grid& g = u_old.grid();
  ScalarField sig = sigma_field(rho_new, p, regime);

  StokesProblem pb{VectorField(g), laplacian(sig, sigma_bc(p, regime)),
                   ScalarField(g, Loc::Center), velocity_bc(p, regime, sig), 1.0 / dt, &rho_new};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) pb.div_target.at(i, j) *= p.c0;
  pb.mu.set_interior([&](int i, int j) { return p.mu.value(rho_new.at(i, j)); });

  VectorField rho_f = rho_on_faces(rho_new);
  VectorField adv = advection_term(advector, rho_f);
  pb.rhs.set_u([&](int i, int j) {
    double v = rho_f.u(i, j) * u_old.u(i, j) / dt - adv.u(i, j);
    if (forcing && forcing->mom) v += forcing->mom(pb.rhs.xu(i), pb.rhs.yu(j), t_new, 0);
    return v;
  });
  pb.rhs.set_v([&](int i, int j) {
    double v = rho_f.v(i, j) * u_old.v(i, j) / dt - adv.v(i, j);
    if (forcing && forcing->mom) v += forcing->mom(pb.rhs.xv(i), pb.rhs.yv(j), t_new, 1);
    return v;
  });

  StokesResult r = solve_stokes(pb, ctl.lin);
  return {std::move(r.u), std::move(r.p)};
}

// ---------------------------------------------------------------------------
// Picard loop and outer time loop

inline std::pair<FluidState, PicardReport> picard_step(const FluidState& st,
                                                       const StepControls& ctl,
                                                       const ModelParams& p,
                                                       const Forcing* forcing = nullptr) {
  const Grid& g = st.rho.grid();
  const Regime regime = g.bc_regime;
  const double t_new = st.t + ctl.dt;

  PicardReport rep;
  ScalarField rho_k = st.rho;
  VectorField u_k = st.u;
  for (int k = 1; k <= ctl.pic_max; ++k) {
    const ScalarField phi = rho_k;
    ScalarField sig_prev = sigma_field(phi, p, regime);
    VectorField Phi = u_k;  // v^{k-1} = u^{k-1} - c0*grad(1/rho^{k-1})
    {
      VectorField gs = gradient(sig_prev, sigma_bc(p, regime));
      axpy(Phi, -p.c0, gs);
    }
    VectorField advector = with_bc(u_k, velocity_bc(p, regime, sig_prev));

    ScalarField rho_next =
        mass_step_linearized(st.rho, Phi, phi, ctl.dt, regime, p, ctl, forcing, t_new);
    auto [u_next, pi] = momentum_step_linearized(st.u, rho_next, advector, ctl.dt, regime, p,
                                                 ctl, forcing, t_new);

    ScalarField drho = rho_next;
    axpy(drho, -1.0, rho_k);
    VectorField du = u_next;
    axpy(du, -1.0, u_k);
    const double delta = h1_norm(drho) + l2_norm(du);
    rep.deltas.push_back(delta);
    rep.iterations = k;

    rho_k = std::move(rho_next);
    u_k = std::move(u_next);

    if (delta <= ctl.pic_tol) {
      rep.converged = true;
      FluidState out{t_new, std::move(rho_k), std::move(u_k), std::move(pi),
                     ScalarField(g, Loc::Center)};
      // modified pressure pi1 = pi - c0*(log rho)_t, both mean-free
      out.pi1.set_interior([&](int i, int j) {
        return out.pi.at(i, j) -
               p.c0 * (std::log(out.rho.at(i, j)) - std::log(st.rho.at(i, j))) / ctl.dt;
      });
      subtract_mean(out.pi1);
      rep.constraint_residual = residual_divergence_constraint(out, p);
      if (rep.constraint_residual > ctl.constraint_tol)
        throw Error("picard_step: divergence constraint residual above tolerance");
      return {std::move(out), rep};
    }
  }
  throw Error("picard_step: no convergence within pic_max iterations");
}

// Called once per accepted step with (new state, previous state, report, dt).
using StepSink =
    std::function<void(const FluidState&, const FluidState&, const PicardReport&, double)>;

inline FluidState advance(FluidState state, double t_end, const StepControls& ctl,
                          const ModelParams& p, const StepSink& sink = nullptr,
                          const Forcing* forcing = nullptr) {
  p.validate();
  if (!(t_end > state.t)) throw Error("advance: t_end must exceed the state time");
  const double eps = 1e-12 * std::max(1.0, std::abs(t_end));
  while (t_end - state.t > eps) {
    StepControls local = ctl;
    local.dt = std::min(ctl.dt, t_end - state.t);
    int halvings = 0;
    for (;;) {
      try {
        auto [next, rep] = picard_step(state, local, p, forcing);
        if (sink) sink(next, state, rep, local.dt);
        state = std::move(next);
        break;
      } catch (const Error&) {
        if (++halvings > ctl.max_halvings) throw;
        local.dt *= 0.5;
      }
    }
  }
  return state;
}

}  // namespace mc
