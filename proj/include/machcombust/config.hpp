#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "machcombust/io.hpp"
#include "machcombust/mms.hpp"

// Run configuration: flat `section.key = value` text, `#` comments. Parsing
// collects every violation before failing so a bad file reports all problems
// at once; unknown keys are fatal.

namespace mc {

struct RunConfig {
  int nx = 0, ny = 0;
  double lx = 1, ly = 1;
  Regime regime = Regime::A;
  ModelParams params;
  double friction_const = 0;  // regime A; params.friction_b built from this

  // initial condition: rest (constant density at rest) or vortex_bump
  // (compatible u0 = amp_u * perp-grad(psi) + c0 * grad(1/rho_target))
  std::string ic_kind = "rest";
  double ic_rho_mean = 1.0;
  double ic_amp_u = 0.0;
  double ic_amp_rho = 0.0;

  double t_end = 0;
  StepControls controls;

  std::string csv_path;          // empty: no CSV
  std::string snapshot_prefix;   // empty: no snapshots
  int snapshot_every = 0;        // accepted steps between snapshots; 0: never
  std::string checkpoint_path;   // empty: no checkpoints
  int checkpoint_every = 0;

  double serrin_r = 4, serrin_s = 4;
  double serrin_threshold = 1e6;

  std::string source_text;  // verbatim config, hashed into checkpoints

  std::uint64_t hash() const { return fnv1a64(source_text); }

  Grid grid() const { return make_grid(nx, ny, lx, ly, regime); }

  FluidState initial_state() const {
    Grid g = grid();
    if (ic_kind == "rest") {
      FluidState st{0.0, ScalarField(g, Loc::Center, ic_rho_mean), VectorField(g),
                    ScalarField(g, Loc::Center), ScalarField(g, Loc::Center)};
      apply_bc(st.rho, rho_bc(params, regime));
      return st;
    }
    // vortex_bump: density target plus a solenoidal swirl, made exactly
    // compatible through init_from_velocity
    constexpr double pi = 3.14159265358979323846;
    ScalarField rho_t(g, Loc::Center);
    const double base = regime == Regime::B ? params.rho_tilde : ic_rho_mean;
    rho_t.set_interior([&](int i, int j) {
      const double x = g.xc(i) / lx, y = g.yc(j) / ly;
      const double prof = regime == Regime::B ? std::sin(pi * x) * std::sin(pi * y)
                                              : std::cos(pi * x) * std::cos(pi * y);
      return base + ic_amp_rho * prof;
    });
    apply_bc(rho_t, rho_bc(params, regime));
    ScalarField sig = sigma_field(rho_t, params, regime);
    ScalarField psi(g, Loc::Center);
    psi.set_interior([&](int i, int j) {
      const double x = g.xc(i) / lx, y = g.yc(j) / ly;
      const double s2x = std::sin(pi * x), s2y = std::sin(pi * y);
      return ic_amp_u * s2x * s2x * s2y * s2y;
    });
    VectorField u0 = perp_gradient(psi);
    VectorField gs = gradient(sig, sigma_bc(params, regime));
    axpy(u0, params.c0, gs);
    return init_from_velocity(u0, params, mean(rho_t));
  }
};

namespace detail {

struct KvDoc {
  std::map<std::string, std::string> kv;
  std::vector<std::string> errors;
  std::vector<std::string> consumed;

  bool has(const std::string& k) const { return kv.count(k) != 0; }

  std::string take(const std::string& k, const std::string& fallback, bool required) {
    consumed.push_back(k);
    auto it = kv.find(k);
    if (it == kv.end()) {
      if (required) errors.push_back("missing required key '" + k + "'");
      return fallback;
    }
    return it->second;
  }
  double num(const std::string& k, double fallback, bool required = false) {
    const std::string s = take(k, "", required);
    if (s.empty()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      errors.push_back("key '" + k + "': not a number: '" + s + "'");
      return fallback;
    }
  }
  int integer(const std::string& k, int fallback, bool required = false) {
    const double v = num(k, fallback, required);
    if (v != int(v)) errors.push_back("key '" + k + "': not an integer");
    return int(v);
  }
  std::string word(const std::string& k, const std::string& fallback, bool required = false) {
    return take(k, fallback, required);
  }
};

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  detail::KvDoc doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      doc.errors.push_back("line " + std::to_string(lineno) + ": expected 'section.key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty() || key.find('.') == std::string::npos) {
      doc.errors.push_back("line " + std::to_string(lineno) + ": key must be 'section.key'");
      continue;
    }
    if (doc.kv.count(key))
      doc.errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    doc.kv[key] = val;
  }

  RunConfig c;
  c.source_text = text;
  c.nx = doc.integer("grid.nx", 0, true);
  c.ny = doc.integer("grid.ny", 0, true);
  c.lx = doc.num("grid.lx", 1.0);
  c.ly = doc.num("grid.ly", 1.0);

  const std::string reg = doc.word("regime.kind", "", true);
  if (reg == "A")
    c.regime = Regime::A;
  else if (reg == "B")
    c.regime = Regime::B;
  else if (reg == "C")
    c.regime = Regime::C;
  else if (!reg.empty())
    doc.errors.push_back("key 'regime.kind': expected A, B, or C");

  c.params.c0 = doc.num("model.c0", 0.1);
  c.params.alpha = doc.num("model.alpha", 0.5);
  c.params.beta = doc.num("model.beta", 2.0);
  c.params.rho_tilde = doc.num("model.rho_tilde", 1.0);
  const std::string mu = doc.word("model.mu_law", "constant");
  if (mu == "constant") {
    c.params.mu = MuLaw{MuLawKind::Constant, doc.num("model.mu0", 0.1), 0, 0};
  } else if (mu == "affine") {
    c.params.mu = MuLaw{MuLawKind::Affine, doc.num("model.mu0", 0.1), doc.num("model.mu1", 0.0), 0};
  } else if (mu == "exp") {
    c.params.mu = MuLaw{MuLawKind::Exp, doc.num("model.mu0", 0.1), 0, doc.num("model.k", 0.0)};
  } else {
    doc.errors.push_back("key 'model.mu_law': expected constant, affine, or exp");
    doc.num("model.mu0", 0.1);  // still consume the parameter keys
    doc.num("model.mu1", 0.0);
    doc.num("model.k", 0.0);
  }
  const std::string fric = doc.word("model.friction", "zero");
  if (fric == "zero") {
    c.friction_const = 0;
    doc.num("model.b0", 0.0);
  } else if (fric == "constant") {
    c.friction_const = doc.num("model.b0", 0.0);
    if (c.friction_const < 0) doc.errors.push_back("key 'model.b0': friction must be >= 0");
  } else {
    doc.errors.push_back("key 'model.friction': expected zero or constant");
    doc.num("model.b0", 0.0);
  }
  if (c.friction_const > 0) {
    const double b0 = c.friction_const;
    c.params.friction_b = [b0](double, double) { return b0; };
  }

  c.ic_kind = doc.word("ic.kind", "rest");
  if (c.ic_kind != "rest" && c.ic_kind != "vortex_bump")
    doc.errors.push_back("key 'ic.kind': expected rest or vortex_bump");
  c.ic_rho_mean = doc.num("ic.rho_mean", 1.0);
  c.ic_amp_u = doc.num("ic.amp_u", 0.0);
  c.ic_amp_rho = doc.num("ic.amp_rho", 0.0);

  c.t_end = doc.num("time.t_end", 0.0, true);
  c.controls.dt = doc.num("time.dt", 0.0, true);
  c.controls.pic_tol = doc.num("time.pic_tol", 1e-9);
  c.controls.pic_max = doc.integer("time.pic_max", 50);
  c.controls.constraint_tol = doc.num("time.constraint_tol", 1e-7);

  c.csv_path = doc.word("output.csv", "");
  c.snapshot_prefix = doc.word("output.snapshot_prefix", "");
  c.snapshot_every = doc.integer("output.snapshot_every", 0);
  c.checkpoint_path = doc.word("output.checkpoint", "");
  c.checkpoint_every = doc.integer("output.checkpoint_every", 0);

  c.serrin_r = doc.num("serrin.r", 4.0);
  c.serrin_s = doc.num("serrin.s", 4.0);
  c.serrin_threshold = doc.num("serrin.threshold", 1e6);

  for (const auto& [k, v] : doc.kv) {
    bool known = false;
    for (const auto& u : doc.consumed) known = known || u == k;
    if (!known) doc.errors.push_back("unknown key '" + k + "'");
  }

  // semantic validation, still collecting everything
  if (doc.has("grid.nx") && (c.nx < 4)) doc.errors.push_back("key 'grid.nx': need nx >= 4");
  if (doc.has("grid.ny") && (c.ny < 4)) doc.errors.push_back("key 'grid.ny': need ny >= 4");
  if (!(c.lx > 0)) doc.errors.push_back("key 'grid.lx': must be positive");
  if (!(c.ly > 0)) doc.errors.push_back("key 'grid.ly': must be positive");
  if (!(c.params.c0 > 0)) doc.errors.push_back("key 'model.c0': must be positive");
  if (!(0 < c.params.alpha && c.params.alpha <= c.params.beta))
    doc.errors.push_back("keys 'model.alpha'/'model.beta': need 0 < alpha <= beta");
  if (!(c.params.alpha <= c.params.rho_tilde && c.params.rho_tilde <= c.params.beta))
    doc.errors.push_back("key 'model.rho_tilde': must lie in [alpha, beta]");
  for (double s : {c.params.alpha, c.params.beta})
    if (!(c.params.mu.value(s) > 0)) {
      doc.errors.push_back("keys 'model.mu*': viscosity not positive on [alpha, beta]");
      break;
    }
  if (doc.has("time.t_end") && !(c.t_end > 0))
    doc.errors.push_back("key 'time.t_end': must be positive");
  if (doc.has("time.dt") && !(c.controls.dt > 0))
    doc.errors.push_back("key 'time.dt': must be positive");
  if (!(c.controls.pic_tol > 0)) doc.errors.push_back("key 'time.pic_tol': must be positive");
  if (c.controls.pic_max < 1) doc.errors.push_back("key 'time.pic_max': must be >= 1");
  if (!(c.controls.constraint_tol > 0))
    doc.errors.push_back("key 'time.constraint_tol': must be positive");
  if (c.snapshot_every < 0) doc.errors.push_back("key 'output.snapshot_every': must be >= 0");
  if (c.checkpoint_every < 0) doc.errors.push_back("key 'output.checkpoint_every': must be >= 0");
  try {
    SerrinAccumulator::validate(c.serrin_r, c.serrin_s);
  } catch (const Error& e) {
    doc.errors.push_back(std::string("keys 'serrin.r'/'serrin.s': ") + e.what());
  }
  if (!(c.serrin_threshold > 0)) doc.errors.push_back("key 'serrin.threshold': must be positive");

  if (!doc.errors.empty()) {
    std::string msg = "config invalid (" + std::to_string(doc.errors.size()) + " problems):";
    for (const auto& e : doc.errors) msg += "\n  - " + e;
    throw Error(msg);
  }
  return c;
}

}  // namespace mc
