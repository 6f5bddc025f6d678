#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

// Staggered (MAC) grid on [0,lx]x[0,ly]:
//   cell centers  (i+1/2, j+1/2)h : rho, pi, log rho
//   x-faces       (i, j+1/2)h     : u1
//   y-faces       (i+1/2, j)h     : u2
//   corners       (i, j)h         : curl values
// Center and face arrays carry one ghost layer; corner arrays do not.

namespace mc {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Regime { A, B, C };

inline char regime_char(Regime r) {
  switch (r) {
    case Regime::A: return 'A';
    case Regime::B: return 'B';
    default: return 'C';
  }
}

struct Grid {
  int nx = 0, ny = 0;
  double lx = 0, ly = 0;
  double hx = 0, hy = 0;
  Regime bc_regime = Regime::C;

  bool same_as(const Grid& o) const {
    return nx == o.nx && ny == o.ny && lx == o.lx && ly == o.ly;
  }
  double cell_area() const { return hx * hy; }
  // sample coordinates
  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }
  double xn(int i) const { return i * hx; }
  double yn(int j) const { return j * hy; }
};

inline Grid make_grid(int nx, int ny, double lx, double ly, Regime regime) {
  if (nx < 4 || ny < 4) throw Error("make_grid: undersized grid (need nx,ny >= 4)");
  if (!(lx > 0) || !(ly > 0) || !std::isfinite(lx) || !std::isfinite(ly))
    throw Error("make_grid: extents must be finite and positive");
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.lx = lx;
  g.ly = ly;
  g.hx = lx / nx;
  g.hy = ly / ny;
  g.bc_regime = regime;
  return g;
}

enum class Loc : std::uint32_t { Center = 0, Corner = 1, XFace = 2, YFace = 3 };

// Scalar samples at centers (with ghosts) or corners (no ghosts).
class ScalarField {
public:
  ScalarField() = default;
  ScalarField(const Grid& g, Loc loc, double fill = 0.0) : g_(g), loc_(loc) {
    if (loc == Loc::Center)
      a_.assign(std::size_t(g.nx + 2) * (g.ny + 2), fill);
    else if (loc == Loc::Corner)
      a_.assign(std::size_t(g.nx + 1) * (g.ny + 1), fill);
    else
      throw Error("ScalarField: location must be center or corner");
  }

  const Grid& grid() const { return g_; }
  Loc loc() const { return loc_; }

  // centers: i in [-1, nx], j in [-1, ny] (ghosts at -1, n)
  // corners: i in [0, nx], j in [0, ny]
  double& at(int i, int j) {
    return a_[loc_ == Loc::Center ? std::size_t(j + 1) * (g_.nx + 2) + (i + 1)
                                  : std::size_t(j) * (g_.nx + 1) + i];
  }
  double at(int i, int j) const {
    return a_[loc_ == Loc::Center ? std::size_t(j + 1) * (g_.nx + 2) + (i + 1)
                                  : std::size_t(j) * (g_.nx + 1) + i];
  }

  std::vector<double>& raw() { return a_; }
  const std::vector<double>& raw() const { return a_; }

  int isize() const { return loc_ == Loc::Center ? g_.nx : g_.nx + 1; }
  int jsize() const { return loc_ == Loc::Center ? g_.ny : g_.ny + 1; }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void fill(double v) {
    for (auto& x : a_) x = v;
  }

  template <class F>
  void for_interior(F&& f) const {
    for (int j = 0; j < jsize(); ++j)
      for (int i = 0; i < isize(); ++i) f(i, j, at(i, j));
  }
  template <class F>
  void set_interior(F&& f) {
    for (int j = 0; j < jsize(); ++j)
      for (int i = 0; i < isize(); ++i) at(i, j) = f(i, j);
  }
  // sample position of entry (i,j)
  double xs(int i) const { return loc_ == Loc::Center ? g_.xc(i) : g_.xn(i); }
  double ys(int j) const { return loc_ == Loc::Center ? g_.yc(j) : g_.yn(j); }

private:
  Grid g_;
  Loc loc_ = Loc::Center;
  std::vector<double> a_;
};

// Velocity samples: component 1 at x-faces, component 2 at y-faces, one ghost layer each.
class VectorField {
public:
  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0) : g_(g) {
    u_.assign(std::size_t(g.nx + 3) * (g.ny + 2), fill);
    v_.assign(std::size_t(g.nx + 2) * (g.ny + 3), fill);
  }

  const Grid& grid() const { return g_; }

  // u: i in [-1, nx+1], j in [-1, ny]; interior i in [0,nx], j in [0,ny-1]
  double& u(int i, int j) { return u_[std::size_t(j + 1) * (g_.nx + 3) + (i + 1)]; }
  double u(int i, int j) const { return u_[std::size_t(j + 1) * (g_.nx + 3) + (i + 1)]; }
  // v: i in [-1, nx], j in [-1, ny+1]; interior i in [0,nx-1], j in [0,ny]
  double& v(int i, int j) { return v_[std::size_t(j + 1) * (g_.nx + 2) + (i + 1)]; }
  double v(int i, int j) const { return v_[std::size_t(j + 1) * (g_.nx + 2) + (i + 1)]; }

  std::vector<double>& uraw() { return u_; }
  std::vector<double>& vraw() { return v_; }
  const std::vector<double>& uraw() const { return u_; }
  const std::vector<double>& vraw() const { return v_; }

  bool all_finite() const {
    for (double x : u_)
      if (!std::isfinite(x)) return false;
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  void fill(double a, double b) {
    for (auto& x : u_) x = a;
    for (auto& x : v_) x = b;
  }

  // positions: u(i,j) at (i*hx, (j+1/2)*hy); v(i,j) at ((i+1/2)*hx, j*hy)
  double xu(int i) const { return g_.xn(i); }
  double yu(int j) const { return g_.yc(j); }
  double xv(int i) const { return g_.xc(i); }
  double yv(int j) const { return g_.yn(j); }

  template <class F>
  void for_u(F&& f) const {
    for (int j = 0; j < g_.ny; ++j)
      for (int i = 0; i <= g_.nx; ++i) f(i, j, u(i, j));
  }
  template <class F>
  void for_v(F&& f) const {
    for (int j = 0; j <= g_.ny; ++j)
      for (int i = 0; i < g_.nx; ++i) f(i, j, v(i, j));
  }
  template <class F>
  void set_u(F&& f) {
    for (int j = 0; j < g_.ny; ++j)
      for (int i = 0; i <= g_.nx; ++i) u(i, j) = f(i, j);
  }
  template <class F>
  void set_v(F&& f) {
    for (int j = 0; j <= g_.ny; ++j)
      for (int i = 0; i < g_.nx; ++i) v(i, j) = f(i, j);
  }

private:
  Grid g_;
  std::vector<double> u_, v_;
};

enum class Wall { Bottom, Top, Left, Right };

// Boundary specification for ghost fills.
struct BoundarySpec {
  enum class Kind { NeumannZero, DirichletConst, NoSlip, SlipFriction, VelocityProfile };

  Kind kind = Kind::NeumannZero;
  double value = 0.0;  // DirichletConst

  // SlipFriction: tangential friction b(x) >= 0 sampled on the wall, plus an
  // optional inhomogeneous curl offset (used by the v-formulation in regime A,
  // where curl v = -b(v.t) + off with off = -b*c0*(grad(1/rho) . t)).
  std::function<double(double x, double y)> friction;          // b(x) >= 0
  std::function<double(double x, double y, Wall w)> curl_off;  // optional

  // VelocityProfile: trace of the velocity, component-indexed (0 -> u1, 1 -> u2).
  std::function<double(double x, double y, int comp)> profile;

  static BoundarySpec neumann_zero() { return BoundarySpec{}; }
  static BoundarySpec dirichlet(double v) {
    BoundarySpec b;
    b.kind = Kind::DirichletConst;
    b.value = v;
    return b;
  }
  static BoundarySpec no_slip() {
    BoundarySpec b;
    b.kind = Kind::NoSlip;
    return b;
  }
  static BoundarySpec slip_friction(std::function<double(double, double)> bfun,
                                    std::function<double(double, double, Wall)> off = nullptr) {
    BoundarySpec b;
    b.kind = Kind::SlipFriction;
    b.friction = std::move(bfun);
    b.curl_off = std::move(off);
    return b;
  }
  static BoundarySpec slip_friction_const(double b0) {
    if (b0 < 0) throw Error("slip friction b must be nonnegative");
    return slip_friction([b0](double, double) { return b0; });
  }
  static BoundarySpec velocity_profile(std::function<double(double, double, int)> p) {
    BoundarySpec b;
    b.kind = Kind::VelocityProfile;
    b.profile = std::move(p);
    return b;
  }

  bool scalar_kind() const {
    return kind == Kind::NeumannZero || kind == Kind::DirichletConst;
  }
};

}  // namespace mc
