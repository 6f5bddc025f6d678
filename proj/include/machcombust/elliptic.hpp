#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "machcombust/ops.hpp"

// Matrix-free linear solvers on the staggered layout:
//   - CG / BiCGStab kernels over packed interior unknowns
//   - Poisson solves with homogeneous-Neumann or constant-Dirichlet data
//   - generalized Stokes solves (mass + viscous + pressure, divergence target)
//     via a Schur-complement CG with a Cahouet-Chabard type preconditioner
//   - Bogovskii-style divergence lifting and boundary-trace lifting, both as
//     special cases of the Stokes solve

namespace mc {

struct SolverSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-13;
  int max_iter = 0;  // 0: use 10*nx*ny

  int iter_cap(const Grid& g) const { return max_iter > 0 ? max_iter : 10 * g.nx * g.ny; }
};

struct SolveReport {
  int iterations = 0;
  double residual = 0;
  bool converged = false;
};

namespace detail {

using DVec = std::vector<double>;

inline double vdot(const DVec& a, const DVec& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}
inline void vaxpy(DVec& y, double a, const DVec& x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}
inline double vnorm(const DVec& a) { return std::sqrt(vdot(a, a)); }

using ApplyFn = std::function<void(const DVec&, DVec&)>;
using ProjectFn = std::function<void(DVec&)>;

// Preconditioned CG; `project` (if set) removes the operator nullspace from
// the rhs, the iterates, and the preconditioned residuals.
inline SolveReport cg(const ApplyFn& A, DVec b, DVec& x, const SolverSettings& s, int max_iter,
                      const ApplyFn& precond = nullptr, const ProjectFn& project = nullptr) {
  const std::size_t n = b.size();
  if (project) project(b);
  DVec r(n), z(n), p(n), Ap(n);
  A(x, Ap);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
  if (project) project(r);
  const double bnorm = vnorm(b);
  const double tol = std::max(s.abs_tol, s.rel_tol * bnorm);

  auto apply_prec = [&](const DVec& in, DVec& out) {
    if (precond)
      precond(in, out);
    else
      out = in;
    if (project) project(out);
  };

  SolveReport rep;
  rep.residual = vnorm(r);
  if (rep.residual <= tol) {
    rep.converged = true;
    return rep;
  }
  apply_prec(r, z);
  p = z;
  double rz = vdot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A(p, Ap);
    const double pAp = vdot(p, Ap);
    if (!(pAp > 0) || !std::isfinite(pAp))
      throw Error("cg: operator lost positive definiteness");
    const double alpha = rz / pAp;
    vaxpy(x, alpha, p);
    vaxpy(r, -alpha, Ap);
    rep.iterations = it;
    rep.residual = vnorm(r);
    if (rep.residual <= tol) {
      rep.converged = true;
      break;
    }
    apply_prec(r, z);
    const double rz_new = vdot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  if (project) project(x);
  return rep;
}

// Unpreconditioned BiCGStab for the nonsymmetric transport solves.
inline SolveReport bicgstab(const ApplyFn& A, const DVec& b, DVec& x, const SolverSettings& s,
                            int max_iter) {
  const std::size_t n = b.size();
  DVec r(n), r0(n), p(n), v(n), sres(n), t(n);
  A(x, v);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - v[k];
  r0 = r;
  const double bnorm = vnorm(b);
  const double tol = std::max(s.abs_tol, s.rel_tol * bnorm);

  SolveReport rep;
  rep.residual = vnorm(r);
  if (rep.residual <= tol) {
    rep.converged = true;
    return rep;
  }
  double rho = 1, alpha = 1, omega = 1;
  std::fill(p.begin(), p.end(), 0.0);
  std::fill(v.begin(), v.end(), 0.0);
  for (int it = 1; it <= max_iter; ++it) {
    const double rho_new = vdot(r0, r);
    if (std::abs(rho_new) < 1e-300) break;  // restart would be needed; treat as stall
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * (p[k] - omega * v[k]);
    A(p, v);
    alpha = rho / vdot(r0, v);
    for (std::size_t k = 0; k < n; ++k) sres[k] = r[k] - alpha * v[k];
    rep.iterations = it;
    if (vnorm(sres) <= tol) {
      vaxpy(x, alpha, p);
      rep.residual = vnorm(sres);
      rep.converged = true;
      return rep;
    }
    A(sres, t);
    const double tt = vdot(t, t);
    if (!(tt > 0)) break;
    omega = vdot(t, sres) / tt;
    for (std::size_t k = 0; k < n; ++k) x[k] += alpha * p[k] + omega * sres[k];
    for (std::size_t k = 0; k < n; ++k) r[k] = sres[k] - omega * t[k];
    rep.residual = vnorm(r);
    if (!std::isfinite(rep.residual)) throw Error("bicgstab: diverged");
    if (rep.residual <= tol) {
      rep.converged = true;
      return rep;
    }
    if (std::abs(omega) < 1e-300) break;
  }
  return rep;
}

// pack/unpack center interior values
inline DVec pack(const ScalarField& f) {
  DVec x;
  x.reserve(std::size_t(f.isize()) * f.jsize());
  f.for_interior([&](int, int, double v) { x.push_back(v); });
  return x;
}
inline void unpack(const DVec& x, ScalarField& f) {
  std::size_t k = 0;
  f.set_interior([&](int, int) { return x[k++]; });
}

// pack/unpack unconstrained velocity faces (wall-normal boundary faces are
// fixed by the boundary data and are not unknowns)
inline DVec pack(const VectorField& F) {
  const Grid& g = F.grid();
  DVec x;
  x.reserve(std::size_t(g.nx - 1) * g.ny + std::size_t(g.nx) * (g.ny - 1));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) x.push_back(F.u(i, j));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) x.push_back(F.v(i, j));
  return x;
}
inline void unpack(const DVec& x, VectorField& F) {
  const Grid& g = F.grid();
  std::size_t k = 0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) F.u(i, j) = x[k++];
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) F.v(i, j) = x[k++];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Poisson

struct PoissonResult {
  ScalarField x;
  SolveReport report;
};

// Solve laplacian(x) = f with the given scalar boundary condition. Neumann
// data is compatible only for mean-zero f; the mean is projected out and the
// solution is returned mean-free. Dirichlet data may be any constant.
inline PoissonResult solve_poisson(const ScalarField& f, const BoundarySpec& bc,
                                   const SolverSettings& s = {}) {
  if (f.loc() != Loc::Center) throw Error("solve_poisson: rhs must live at centers");
  if (!bc.scalar_kind()) throw Error("solve_poisson: scalar boundary data required");
  const Grid& g = f.grid();
  const bool neumann = bc.kind == BoundarySpec::Kind::NeumannZero;
  if (neumann) {
    const double net = mean(f) * g.lx * g.ly;
    if (std::abs(net) > std::max(100 * s.abs_tol, 1e-10 * (1.0 + l2_norm(f))))
      throw Error("solve_poisson: incompatible Neumann data (nonzero mean rhs)");
  }
  const BoundarySpec bc_hom = neumann ? bc : BoundarySpec::dirichlet(0.0);

  ScalarField work(g, Loc::Center);
  auto apply = [&](const detail::DVec& in, detail::DVec& out) {
    detail::unpack(in, work);
    ScalarField lap = laplacian(work, bc_hom);
    out = detail::pack(lap);
    for (auto& v : out) v = -v;  // -laplacian is SPD
  };

  // affine correction: laplacian of the zero field under the actual data
  ScalarField zero(g, Loc::Center);
  ScalarField lap0 = laplacian(zero, bc);
  detail::DVec b = detail::pack(f);
  detail::DVec b0 = detail::pack(lap0);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = -(b[k] - b0[k]);

  detail::ProjectFn project = nullptr;
  if (neumann) {
    project = [&](detail::DVec& v) {
      double m = 0;
      for (double q : v) m += q;
      m /= double(v.size());
      for (double& q : v) q -= m;
    };
  }

  detail::DVec x(b.size(), 0.0);
  SolveReport rep = detail::cg(apply, std::move(b), x, s, s.iter_cap(g), nullptr, project);
  if (!rep.converged) throw Error("solve_poisson: CG failed to converge");
  PoissonResult res{ScalarField(g, Loc::Center), rep};
  detail::unpack(x, res.x);
  apply_bc(res.x, bc);
  return res;
}

// ---------------------------------------------------------------------------
// Generalized Stokes

// div(2 mu D(u)) on all unconstrained faces; reads the ghosts of `u`, so the
// boundary condition must already be applied. `mu` needs valid ghosts too.
inline VectorField viscous_divergence(const VectorField& u, const ScalarField& mu) {
  const Grid& g = u.grid();
  if (!mu.grid().same_as(g) || mu.loc() != Loc::Center)
    throw Error("viscous_divergence: mu must be a center field on the same grid");
  ScalarField mu_corner = center_to_corner(mu, BoundarySpec::neumann_zero());

  // tau11, tau22 at centers; tau12 at corners
  ScalarField t11(g, Loc::Center), t22(g, Loc::Center), t12(g, Loc::Corner);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      t11.at(i, j) = 2.0 * mu.at(i, j) * (u.u(i + 1, j) - u.u(i, j)) / g.hx;
      t22.at(i, j) = 2.0 * mu.at(i, j) * (u.v(i, j + 1) - u.v(i, j)) / g.hy;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double d12 =
          0.5 * ((u.u(i, j) - u.u(i, j - 1)) / g.hy + (u.v(i, j) - u.v(i - 1, j)) / g.hx);
      t12.at(i, j) = 2.0 * mu_corner.at(i, j) * d12;
    }

  VectorField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      out.u(i, j) =
          (t11.at(i, j) - t11.at(i - 1, j)) / g.hx + (t12.at(i, j + 1) - t12.at(i, j)) / g.hy;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.v(i, j) =
          (t12.at(i + 1, j) - t12.at(i, j)) / g.hx + (t22.at(i, j) - t22.at(i, j - 1)) / g.hy;
  return out;
}

// rho averaged from centers onto faces (arithmetic mean, Neumann ghosts).
inline VectorField rho_on_faces(const ScalarField& rho_in) {
  ScalarField rho = with_bc(rho_in, BoundarySpec::neumann_zero());
  const Grid& g = rho.grid();
  VectorField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) out.u(i, j) = 0.5 * (rho.at(i - 1, j) + rho.at(i, j));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.v(i, j) = 0.5 * (rho.at(i, j - 1) + rho.at(i, j));
  return out;
}

struct StokesProblem {
  VectorField rhs;                     // momentum forcing on unconstrained faces
  ScalarField div_target;              // g in div u = g
  ScalarField mu;                      // viscosity at centers (interior values)
  BoundarySpec bc;                     // velocity boundary condition
  double mass_coeff = 0;               // 1/dt factor; 0 gives the steady problem
  const ScalarField* rho = nullptr;    // density for the mass term (null: rho == 1)
};

struct StokesResult {
  VectorField u;
  ScalarField p;  // mean-free pressure
  SolveReport outer;
};

// Solve  mass_coeff*rho*u - div(2 mu D(u)) + grad p = rhs,  div u = g  with the
// given velocity boundary condition, by CG on the (negated) pressure Schur
// complement. Inner velocity solves use CG on the SPD momentum operator.
inline StokesResult solve_stokes(const StokesProblem& pb, const SolverSettings& s = {}) {
  const Grid& g = pb.rhs.grid();
  if (pb.bc.scalar_kind()) throw Error("solve_stokes: velocity boundary data required");
  {
    double mu_min = std::numeric_limits<double>::infinity();
    pb.mu.for_interior([&](int, int, double v) { mu_min = std::min(mu_min, v); });
    if (!(mu_min > 0)) throw Error("solve_stokes: viscosity must be positive");
  }
  ScalarField mu = with_bc(pb.mu, BoundarySpec::neumann_zero());
  VectorField rho_f(g);
  if (pb.mass_coeff != 0.0) {
    if (pb.rho)
      rho_f = rho_on_faces(*pb.rho);
    else
      rho_f.fill(1.0, 1.0);
  }

  VectorField uwork(g);
  auto apply_A = [&](const detail::DVec& in, detail::DVec& out) {
    detail::unpack(in, uwork);
    apply_bc(uwork, pb.bc, /*homogeneous=*/true);
    VectorField visc = viscous_divergence(uwork, mu);
    VectorField Au(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i)
        Au.u(i, j) = pb.mass_coeff * rho_f.u(i, j) * uwork.u(i, j) - visc.u(i, j);
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        Au.v(i, j) = pb.mass_coeff * rho_f.v(i, j) * uwork.v(i, j) - visc.v(i, j);
    out = detail::pack(Au);
  };

  SolverSettings inner = s;
  inner.rel_tol = std::min(1e-12, 0.01 * s.rel_tol);
  inner.abs_tol = std::min(1e-14, s.abs_tol);
  const int cap = s.iter_cap(g);

  long inner_iters = 0;
  detail::DVec u_dof(std::size_t(g.nx - 1) * g.ny + std::size_t(g.nx) * (g.ny - 1), 0.0);
  auto solve_A = [&](const detail::DVec& rhs, detail::DVec& warm) {
    SolveReport r = detail::cg(apply_A, rhs, warm, inner, cap);
    if (!r.converged) throw Error("solve_stokes: inner velocity CG failed");
    inner_iters += r.iterations;
  };

  // affine parts: operator and divergence of the zero field under the real bc
  VectorField zero_bc(g);
  apply_bc(zero_bc, pb.bc, /*homogeneous=*/false);
  detail::DVec a0;
  {
    VectorField visc = viscous_divergence(zero_bc, mu);
    VectorField A0(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i)
        A0.u(i, j) = pb.mass_coeff * rho_f.u(i, j) * zero_bc.u(i, j) - visc.u(i, j);
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        A0.v(i, j) = pb.mass_coeff * rho_f.v(i, j) * zero_bc.v(i, j) - visc.v(i, j);
    a0 = detail::pack(A0);
  }
  ScalarField d0 = divergence(zero_bc);

  detail::DVec f_hom = detail::pack(pb.rhs);
  for (std::size_t k = 0; k < f_hom.size(); ++k) f_hom[k] -= a0[k];

  ScalarField g_hom = pb.div_target;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) g_hom.at(i, j) -= d0.at(i, j);
  // compatibility: with u.n prescribed everywhere the net divergence must
  // match the boundary flux; reject gross mismatch, project roundoff residual
  if (std::abs(mean(g_hom) * g.lx * g.ly) >
      1e-9 * (1.0 + l2_norm(pb.div_target) + l2_norm(d0)))
    throw Error("solve_stokes: divergence target incompatible with boundary flux");
  subtract_mean(g_hom);

  // Schur operator S p = div(A^{-1} grad p), negated to be SPD
  VectorField gwork(g);
  ScalarField pwork(g, Loc::Center);
  detail::DVec u_inner(u_dof.size(), 0.0);
  auto pack_grad = [&](const ScalarField& p) {
    VectorField gp = gradient(p, BoundarySpec::neumann_zero());
    return detail::pack(gp);
  };
  auto apply_S = [&](const detail::DVec& in, detail::DVec& out) {
    detail::unpack(in, pwork);
    detail::DVec gp = pack_grad(pwork);
    std::fill(u_inner.begin(), u_inner.end(), 0.0);
    solve_A(gp, u_inner);
    detail::unpack(u_inner, gwork);
    apply_bc(gwork, pb.bc, /*homogeneous=*/true);
    ScalarField d = divergence(gwork);
    out = detail::pack(d);
    for (auto& v : out) v = -v;
  };

  // rhs of the Schur system: g_hom - div(A^{-1} f_hom), negated
  std::fill(u_dof.begin(), u_dof.end(), 0.0);
  solve_A(f_hom, u_dof);
  detail::unpack(u_dof, uwork);
  apply_bc(uwork, pb.bc, /*homogeneous=*/true);
  ScalarField div_af = divergence(uwork);
  detail::DVec sb = detail::pack(g_hom);
  {
    detail::DVec da = detail::pack(div_af);
    for (std::size_t k = 0; k < sb.size(); ++k) sb[k] -= da[k];
  }

  // Cahouet-Chabard: M^{-1} r = mu_bar r + mass_coeff*rho_bar*(-lap_N)^{-1} r
  const double mu_bar = mean(pb.mu);
  double rho_bar = 1.0;
  if (pb.rho) rho_bar = mean(*pb.rho);
  SolverSettings prec_tol;
  prec_tol.rel_tol = 1e-12;
  prec_tol.abs_tol = 1e-15;
  ScalarField rwork(g, Loc::Center);
  detail::ApplyFn precond = [&](const detail::DVec& in, detail::DVec& out) {
    out = in;
    for (auto& v : out) v *= mu_bar;
    if (pb.mass_coeff != 0.0) {
      detail::unpack(in, rwork);
      subtract_mean(rwork);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) rwork.at(i, j) = -rwork.at(i, j);
      PoissonResult pr = solve_poisson(rwork, BoundarySpec::neumann_zero(), prec_tol);
      detail::DVec lift = detail::pack(pr.x);
      for (std::size_t k = 0; k < out.size(); ++k)
        out[k] += pb.mass_coeff * rho_bar * lift[k];
    }
  };

  detail::ProjectFn project = [&](detail::DVec& v) {
    double m = 0;
    for (double q : v) m += q;
    m /= double(v.size());
    for (double& q : v) q -= m;
  };

  detail::DVec p_dof(std::size_t(g.nx) * g.ny, 0.0);
  SolverSettings outer = s;
  SolveReport rep = detail::cg(apply_S, std::move(sb), p_dof, outer, cap, precond, project);
  if (!rep.converged) throw Error("solve_stokes: Schur CG failed to converge");

  // recover velocity: u = A^{-1}(f_hom - grad p), then restore boundary data
  StokesResult res{VectorField(g), ScalarField(g, Loc::Center), rep};
  detail::unpack(p_dof, res.p);
  detail::DVec gp = pack_grad(res.p);
  detail::DVec rhs_u = f_hom;
  for (std::size_t k = 0; k < rhs_u.size(); ++k) rhs_u[k] -= gp[k];
  std::fill(u_dof.begin(), u_dof.end(), 0.0);
  solve_A(rhs_u, u_dof);
  detail::unpack(u_dof, res.u);
  apply_bc(res.u, pb.bc, /*homogeneous=*/false);
  res.outer.iterations = rep.iterations;
  return res;
}

// Positional form matching the steady problem statement.
inline StokesResult solve_stokes(const ScalarField& mu, const VectorField& rhs,
                                 const ScalarField& div_target, const BoundarySpec& bc,
                                 const SolverSettings& s = {}) {
  StokesProblem pb{rhs, div_target, mu, bc};
  return solve_stokes(pb, s);
}

// Velocity with div u = f and zero trace (f must be mean-free).
inline StokesResult bogovskii(const ScalarField& f, const SolverSettings& s = {}) {
  const Grid& g = f.grid();
  if (std::abs(mean(f) * g.lx * g.ly) > std::max(100 * s.abs_tol, 1e-10 * (1.0 + l2_norm(f))))
    throw Error("bogovskii: data must have zero mean");
  StokesProblem pb{VectorField(g), f, ScalarField(g, Loc::Center, 1.0), BoundarySpec::no_slip()};
  subtract_mean(pb.div_target);
  return solve_stokes(pb, s);
}

// Divergence-free velocity matching a boundary trace (net flux must vanish).
inline StokesResult lift_boundary(const Grid& g,
                                  std::function<double(double, double, int)> profile,
                                  const SolverSettings& s = {}) {
  StokesProblem pb{VectorField(g), ScalarField(g, Loc::Center), ScalarField(g, Loc::Center, 1.0),
                   BoundarySpec::velocity_profile(std::move(profile))};
  return solve_stokes(pb, s);
}

}  // namespace mc
