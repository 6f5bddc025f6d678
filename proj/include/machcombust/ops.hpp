#pragma once

#include <algorithm>
#include <cmath>

#include "machcombust/field.hpp"

// Discrete differential operators on the staggered layout. All first/second
// differences are width-3 and second-order; laplacian(f) == divergence(gradient(f))
// holds exactly, as do the identities div(perp_grad f) == 0 and curl(grad f) == 0.

namespace mc {

// ---------------------------------------------------------------------------
// Ghost fills

inline void apply_bc(ScalarField& f, const BoundarySpec& bc) {
  if (f.loc() != Loc::Center)
    throw Error("apply_bc: scalar ghost fill applies to center fields only");
  if (!bc.scalar_kind())
    throw Error("apply_bc: velocity boundary spec applied to a scalar field");
  const Grid& g = f.grid();
  const int nx = g.nx, ny = g.ny;
  if (bc.kind == BoundarySpec::Kind::NeumannZero) {
    for (int i = 0; i < nx; ++i) {
      f.at(i, -1) = f.at(i, 0);
      f.at(i, ny) = f.at(i, ny - 1);
    }
    for (int j = -1; j <= ny; ++j) {
      f.at(-1, j) = f.at(0, j);
      f.at(nx, j) = f.at(nx - 1, j);
    }
  } else {  // DirichletConst: linear extrapolation through the boundary value
    const double w = bc.value;
    for (int i = 0; i < nx; ++i) {
      f.at(i, -1) = 2 * w - f.at(i, 0);
      f.at(i, ny) = 2 * w - f.at(i, ny - 1);
    }
    for (int j = -1; j <= ny; ++j) {
      f.at(-1, j) = 2 * w - f.at(0, j);
      f.at(nx, j) = 2 * w - f.at(nx - 1, j);
    }
  }
}

inline ScalarField with_bc(ScalarField f, const BoundarySpec& bc) {
  apply_bc(f, bc);
  return f;
}

namespace detail {

// Tangential ghost value under slip-with-friction. kappa = b*h/2; the ghost is
// chosen so the corner-curl stencil evaluates to -b*(u.t) + off on the wall.
inline double slip_ghost(double u_in, double kappa, double off_h) {
  const double den = 1.0 - kappa;
  if (std::abs(den) < 1e-12) throw Error("slip friction too large for grid spacing");
  return (u_in * (1.0 + kappa) + off_h) / den;
}

}  // namespace detail

// Fill ghost/boundary values of a velocity field. `homogeneous` drops the
// affine data (Dirichlet profile values, curl offsets) and keeps only the part
// linear in the field; operators use it so constraints move to the RHS.
inline void apply_bc(VectorField& F, const BoundarySpec& bc, bool homogeneous = false) {
  const Grid& g = F.grid();
  const int nx = g.nx, ny = g.ny;
  using K = BoundarySpec::Kind;
  if (bc.scalar_kind()) throw Error("apply_bc: scalar boundary spec applied to a velocity field");

  // wall-normal boundary faces
  if (bc.kind == K::VelocityProfile) {
    for (int j = 0; j < ny; ++j) {
      F.u(0, j) = homogeneous ? 0.0 : bc.profile(0.0, F.yu(j), 0);
      F.u(nx, j) = homogeneous ? 0.0 : bc.profile(g.lx, F.yu(j), 0);
    }
    for (int i = 0; i < nx; ++i) {
      F.v(i, 0) = homogeneous ? 0.0 : bc.profile(F.xv(i), 0.0, 1);
      F.v(i, ny) = homogeneous ? 0.0 : bc.profile(F.xv(i), g.ly, 1);
    }
  } else {
    for (int j = 0; j < ny; ++j) F.u(0, j) = F.u(nx, j) = 0.0;
    for (int i = 0; i < nx; ++i) F.v(i, 0) = F.v(i, ny) = 0.0;
  }

  // wall-normal ghosts: odd reflection about the boundary value
  for (int j = 0; j < ny; ++j) {
    F.u(-1, j) = 2 * F.u(0, j) - F.u(1, j);
    F.u(nx + 1, j) = 2 * F.u(nx, j) - F.u(nx - 1, j);
  }
  for (int i = 0; i < nx; ++i) {
    F.v(i, -1) = 2 * F.v(i, 0) - F.v(i, 1);
    F.v(i, ny + 1) = 2 * F.v(i, ny) - F.v(i, ny - 1);
  }

  // tangential ghosts
  auto off = [&](double x, double y, Wall w) {
    return (bc.curl_off && !homogeneous) ? bc.curl_off(x, y, w) : 0.0;
  };
  switch (bc.kind) {
    case K::NoSlip:
      for (int i = 0; i <= nx; ++i) {
        F.u(i, -1) = -F.u(i, 0);
        F.u(i, ny) = -F.u(i, ny - 1);
      }
      for (int j = 0; j <= ny; ++j) {
        F.v(-1, j) = -F.v(0, j);
        F.v(nx, j) = -F.v(nx - 1, j);
      }
      break;
    case K::VelocityProfile:
      for (int i = 0; i <= nx; ++i) {
        const double pb = homogeneous ? 0.0 : bc.profile(F.xu(i), 0.0, 0);
        const double pt = homogeneous ? 0.0 : bc.profile(F.xu(i), g.ly, 0);
        F.u(i, -1) = 2 * pb - F.u(i, 0);
        F.u(i, ny) = 2 * pt - F.u(i, ny - 1);
      }
      for (int j = 0; j <= ny; ++j) {
        const double pl = homogeneous ? 0.0 : bc.profile(0.0, F.yv(j), 1);
        const double pr = homogeneous ? 0.0 : bc.profile(g.lx, F.yv(j), 1);
        F.v(-1, j) = 2 * pl - F.v(0, j);
        F.v(nx, j) = 2 * pr - F.v(nx - 1, j);
      }
      break;
    case K::SlipFriction: {
      for (int i = 0; i <= nx; ++i) {
        const double x = F.xu(i);
        const double bb = bc.friction(x, 0.0), bt = bc.friction(x, g.ly);
        if (bb < 0 || bt < 0) throw Error("slip friction b must be nonnegative");
        F.u(i, -1) = detail::slip_ghost(F.u(i, 0), bb * g.hy / 2, off(x, 0.0, Wall::Bottom) * g.hy);
        F.u(i, ny) =
            detail::slip_ghost(F.u(i, ny - 1), bt * g.hy / 2, -off(x, g.ly, Wall::Top) * g.hy);
      }
      for (int j = 0; j <= ny; ++j) {
        const double y = F.yv(j);
        const double bl = bc.friction(0.0, y), br = bc.friction(g.lx, y);
        if (bl < 0 || br < 0) throw Error("slip friction b must be nonnegative");
        F.v(-1, j) = detail::slip_ghost(F.v(0, j), bl * g.hx / 2, -off(0.0, y, Wall::Left) * g.hx);
        F.v(nx, j) =
            detail::slip_ghost(F.v(nx - 1, j), br * g.hx / 2, off(g.lx, y, Wall::Right) * g.hx);
      }
      break;
    }
    default:
      break;
  }

  // ghost corners of the ghost arrays (only touched by wide interpolations)
  F.u(-1, -1) = F.u(0, -1);
  F.u(nx + 1, -1) = F.u(nx, -1);
  F.u(-1, ny) = F.u(0, ny);
  F.u(nx + 1, ny) = F.u(nx, ny);
  F.v(-1, -1) = F.v(-1, 0);
  F.v(-1, ny + 1) = F.v(-1, ny);
  F.v(nx, -1) = F.v(nx, 0);
  F.v(nx, ny + 1) = F.v(nx, ny);
}

inline VectorField with_bc(VectorField F, const BoundarySpec& bc, bool homogeneous = false) {
  apply_bc(F, bc, homogeneous);
  return F;
}

// ---------------------------------------------------------------------------
// First-order operators

inline VectorField gradient(const ScalarField& fin, const BoundarySpec& bc) {
  if (fin.loc() != Loc::Center) throw Error("gradient: expects a center field");
  ScalarField f = with_bc(fin, bc);
  const Grid& g = f.grid();
  VectorField G(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) G.u(i, j) = (f.at(i, j) - f.at(i - 1, j)) / g.hx;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) G.v(i, j) = (f.at(i, j) - f.at(i, j - 1)) / g.hy;
  return G;
}

inline ScalarField divergence(const VectorField& F) {
  const Grid& g = F.grid();
  ScalarField d(g, Loc::Center);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      d.at(i, j) = (F.u(i + 1, j) - F.u(i, j)) / g.hx + (F.v(i, j + 1) - F.v(i, j)) / g.hy;
  return d;
}

inline ScalarField laplacian(const ScalarField& f, const BoundarySpec& bc) {
  return divergence(gradient(f, bc));
}

// Center field averaged to corners (ghosts must be consistent with bc).
inline ScalarField center_to_corner(const ScalarField& fin, const BoundarySpec& bc) {
  if (fin.loc() != Loc::Center) throw Error("center_to_corner: expects a center field");
  ScalarField f = with_bc(fin, bc);
  const Grid& g = f.grid();
  ScalarField c(g, Loc::Corner);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      c.at(i, j) =
          0.25 * (f.at(i - 1, j - 1) + f.at(i, j - 1) + f.at(i - 1, j) + f.at(i, j));
  return c;
}

// perp gradient (d2 f, -d1 f). Corner input maps exactly onto faces; center
// input is first averaged to corners so that div(perp_grad f) == 0 stays exact.
inline VectorField perp_gradient(const ScalarField& fin,
                                 const BoundarySpec& bc = BoundarySpec::neumann_zero()) {
  const Grid& g = fin.grid();
  const ScalarField f = fin.loc() == Loc::Corner ? fin : center_to_corner(fin, bc);
  VectorField P(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) P.u(i, j) = (f.at(i, j + 1) - f.at(i, j)) / g.hy;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) P.v(i, j) = -(f.at(i + 1, j) - f.at(i, j)) / g.hx;
  return P;
}

// corner-centered curl = d1 u2 - d2 u1; reads the ghost layer of F.
inline ScalarField curl2d(const VectorField& F) {
  const Grid& g = F.grid();
  ScalarField c(g, Loc::Corner);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      c.at(i, j) = (F.v(i, j) - F.v(i - 1, j)) / g.hx - (F.u(i, j) - F.u(i, j - 1)) / g.hy;
  return c;
}

// ---------------------------------------------------------------------------
// Quadrature, inner products, norms

inline double inner(const ScalarField& a, const ScalarField& b) {
  if (!a.grid().same_as(b.grid()) || a.loc() != b.loc()) throw Error("inner: field mismatch");
  double s = 0;
  for (int j = 0; j < a.jsize(); ++j)
    for (int i = 0; i < a.isize(); ++i) s += a.at(i, j) * b.at(i, j);
  return s;
}

inline double inner(const VectorField& a, const VectorField& b) {
  if (!a.grid().same_as(b.grid())) throw Error("inner: grid mismatch");
  double s = 0;
  const Grid& g = a.grid();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) s += a.u(i, j) * b.u(i, j);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) s += a.v(i, j) * b.v(i, j);
  return s;
}

inline double mean(const ScalarField& f) {
  double s = 0;
  int n = 0;
  f.for_interior([&](int, int, double v) {
    s += v;
    ++n;
  });
  return s / n;
}

inline void subtract_mean(ScalarField& f) {
  const double m = mean(f);
  for (int j = 0; j < f.jsize(); ++j)
    for (int i = 0; i < f.isize(); ++i) f.at(i, j) -= m;
}

inline double lp_norm(const ScalarField& f, double p) {
  if (p < 1) throw Error("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0;
    f.for_interior([&](int, int, double v) { m = std::max(m, std::abs(v)); });
    return m;
  }
  double s = 0;
  f.for_interior([&](int, int, double v) { s += std::pow(std::abs(v), p); });
  return std::pow(s * f.grid().cell_area(), 1.0 / p);
}

// Component-wise Lp of a MAC vector (equivalent norm; exact for p = 2).
inline double lp_norm(const VectorField& F, double p) {
  if (p < 1) throw Error("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0;
    F.for_u([&](int, int, double v) { m = std::max(m, std::abs(v)); });
    F.for_v([&](int, int, double v) { m = std::max(m, std::abs(v)); });
    return m;
  }
  double s = 0;
  F.for_u([&](int, int, double v) { s += std::pow(std::abs(v), p); });
  F.for_v([&](int, int, double v) { s += std::pow(std::abs(v), p); });
  return std::pow(s * F.grid().cell_area(), 1.0 / p);
}

inline double l2_norm(const ScalarField& f) { return lp_norm(f, 2.0); }
inline double l2_norm(const VectorField& F) { return lp_norm(F, 2.0); }

// Face-difference gradient magnitude norm: || [d1 u1, d2 u1, d1 u2, d2 u2] ||_2.
// Ghosts of F must be filled.
inline double grad_l2_norm(const VectorField& F) {
  const Grid& g = F.grid();
  double s = 0;
  // d1 u1 at centers, d2 u1 at corners
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double d = (F.u(i + 1, j) - F.u(i, j)) / g.hx;
      s += d * d;
    }
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const double d = (F.u(i, j) - F.u(i, j - 1)) / g.hy;
      s += d * d;
    }
  // d1 u2 at corners, d2 u2 at centers
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
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

inline double h1_norm(const VectorField& F) {
  const double a = l2_norm(F), b = grad_l2_norm(F);
  return std::sqrt(a * a + b * b);
}

inline double h1_norm(const ScalarField& f,
                      const BoundarySpec& bc = BoundarySpec::neumann_zero()) {
  const double a = l2_norm(f), b = l2_norm(gradient(f, bc));
  return std::sqrt(a * a + b * b);
}

// ---------------------------------------------------------------------------
// Small helpers shared by the solvers and the model

inline ScalarField zeros_center(const Grid& g) { return ScalarField(g, Loc::Center); }

inline void axpy(ScalarField& y, double a, const ScalarField& x) {
  for (std::size_t k = 0; k < y.raw().size(); ++k) y.raw()[k] += a * x.raw()[k];
}
inline void axpy(VectorField& y, double a, const VectorField& x) {
  for (std::size_t k = 0; k < y.uraw().size(); ++k) y.uraw()[k] += a * x.uraw()[k];
  for (std::size_t k = 0; k < y.vraw().size(); ++k) y.vraw()[k] += a * x.vraw()[k];
}
inline void scale(VectorField& y, double a) {
  for (auto& x : y.uraw()) x *= a;
  for (auto& x : y.vraw()) x *= a;
}

// u2 averaged to an x-face / u1 averaged to a y-face (4-point).
inline double v_at_u(const VectorField& F, int i, int j) {
  return 0.25 * (F.v(i - 1, j) + F.v(i, j) + F.v(i - 1, j + 1) + F.v(i, j + 1));
}
inline double u_at_v(const VectorField& F, int i, int j) {
  return 0.25 * (F.u(i, j - 1) + F.u(i + 1, j - 1) + F.u(i, j) + F.u(i + 1, j));
}

}  // namespace mc
