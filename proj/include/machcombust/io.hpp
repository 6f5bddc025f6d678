#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "machcombust/diagnostics.hpp"

// Binary artifacts. Snapshot: 32-byte header (magic "MCF1", nx, ny, location
// tag, format version, pad, time as f64) followed by the row-major physical
// values as little-endian f64. Checkpoint: config hash plus the bit-exact
// state and accumulators, built from snapshot blocks.

namespace mc {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

static_assert(sizeof(double) == 8);

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(char((v >> (8 * k)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(char((v >> (8 * k)) & 0xff));
}
inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;
  std::uint32_t u32() {
    if (pos + 4 > s.size()) throw Error("snapshot: truncated stream");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(static_cast<unsigned char>(s[pos++])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    if (pos + 8 > s.size()) throw Error("snapshot: truncated stream");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(static_cast<unsigned char>(s[pos++])) << (8 * k);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

}  // namespace detail

inline constexpr std::uint32_t kSnapshotVersion = 1;

// Physical extents per location (ghosts are derived data, never serialized).
inline std::pair<int, int> snapshot_extent(const Grid& g, Loc loc) {
  switch (loc) {
    case Loc::Center: return {g.nx, g.ny};
    case Loc::Corner: return {g.nx + 1, g.ny + 1};
    case Loc::XFace: return {g.nx + 1, g.ny};
    default: return {g.nx, g.ny + 1};
  }
}

inline std::string snapshot_bytes(const ScalarField& f, double t) {
  const Grid& g = f.grid();
  std::string out;
  out += "MCF1";
  detail::put_u32(out, std::uint32_t(g.nx));
  detail::put_u32(out, std::uint32_t(g.ny));
  detail::put_u32(out, std::uint32_t(f.loc()));
  detail::put_u32(out, kSnapshotVersion);
  detail::put_u32(out, 0);  // pad to 32 bytes
  detail::put_f64(out, t);
  auto [mx, my] = snapshot_extent(g, f.loc());
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) detail::put_f64(out, f.at(i, j));
  return out;
}

struct SnapshotHeader {
  int nx = 0, ny = 0;
  Loc loc = Loc::Center;
  double t = 0;
};

// Reads payload values into `f` (grid must match the header).
inline SnapshotHeader snapshot_parse(const std::string& bytes, ScalarField& f) {
  if (bytes.size() < 32 || bytes.compare(0, 4, "MCF1") != 0)
    throw Error("snapshot: bad magic");
  detail::Reader r{bytes, 4};
  SnapshotHeader h;
  h.nx = int(r.u32());
  h.ny = int(r.u32());
  const std::uint32_t loc = r.u32();
  if (loc > 3) throw Error("snapshot: bad location tag");
  h.loc = Loc(loc);
  if (r.u32() != kSnapshotVersion) throw Error("snapshot: unsupported version");
  r.u32();  // pad
  h.t = r.f64();
  const Grid& g = f.grid();
  if (h.nx != g.nx || h.ny != g.ny || h.loc != f.loc())
    throw Error("snapshot: extent/location mismatch");
  auto [mx, my] = snapshot_extent(g, f.loc());
  for (int j = 0; j < my; ++j)
    for (int i = 0; i < mx; ++i) f.at(i, j) = r.f64();
  return h;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path);
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw Error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return s;
}

inline void snapshot_save(const std::string& path, const ScalarField& f, double t) {
  write_file(path, snapshot_bytes(f, t));
}

// ---------------------------------------------------------------------------
// Checkpoints

struct RunAccumulators {
  SerrinAccumulator serrin_grad_rho = make_serrin(4, 4, SerrinTarget::GradRho);
  SerrinAccumulator serrin_velocity = make_serrin(4, 4, SerrinTarget::Velocity);
  std::uint64_t steps_accepted = 0;
};

inline constexpr char kCheckpointMagic[4] = {'M', 'C', 'K', '1'};

// The checkpoint embeds the verbatim config text so a resume needs no other
// input; the hash guards against restoring under a different configuration.
inline std::string checkpoint_bytes(const std::string& config_text, const FluidState& st,
                                    const RunAccumulators& acc) {
  std::string out;
  out.append(kCheckpointMagic, 4);
  detail::put_u32(out, kSnapshotVersion);
  detail::put_u64(out, fnv1a64(config_text));
  detail::put_u32(out, std::uint32_t(config_text.size()));
  out += config_text;
  detail::put_u64(out, acc.steps_accepted);
  for (double v : {acc.serrin_grad_rho.r, acc.serrin_grad_rho.s, acc.serrin_grad_rho.integral,
                   acc.serrin_grad_rho.sup, acc.serrin_velocity.r, acc.serrin_velocity.s,
                   acc.serrin_velocity.integral, acc.serrin_velocity.sup})
    detail::put_f64(out, v);
  const Grid& g = st.rho.grid();
  // u/v faces ride in corner-located scalar holders so each block is a
  // self-describing snapshot; the corner extent covers both face extents
  ScalarField uh(g, Loc::Corner), vh(g, Loc::Corner);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) uh.at(i, j) = st.u.u(i, j);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) vh.at(i, j) = st.u.v(i, j);
  out += snapshot_bytes(st.rho, st.t);
  out += snapshot_bytes(uh, st.t);
  out += snapshot_bytes(vh, st.t);
  out += snapshot_bytes(st.pi, st.t);
  out += snapshot_bytes(st.pi1, st.t);
  return out;
}

inline void checkpoint_save(const std::string& path, const std::string& config_text,
                            const FluidState& st, const RunAccumulators& acc) {
  write_file(path, checkpoint_bytes(config_text, st, acc));
}

// Reads only the embedded config text (used by resume before any state exists).
inline std::string checkpoint_config_text(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw Error("checkpoint: bad magic");
  detail::Reader r{bytes, 4};
  if (r.u32() != kSnapshotVersion) throw Error("checkpoint: unsupported version");
  const std::uint64_t hash = r.u64();
  const std::uint32_t len = r.u32();
  if (r.pos + len > bytes.size()) throw Error("checkpoint: truncated config text");
  std::string text = bytes.substr(r.pos, len);
  if (fnv1a64(text) != hash) throw Error("checkpoint: embedded config fails its hash");
  return text;
}

// Restores onto a state shaped by the caller's config; refuses a hash mismatch.
inline RunAccumulators checkpoint_restore(const std::string& path, std::uint64_t config_hash,
                                          FluidState& st) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw Error("checkpoint: bad magic");
  detail::Reader r{bytes, 4};
  if (r.u32() != kSnapshotVersion) throw Error("checkpoint: unsupported version");
  if (r.u64() != config_hash)
    throw Error("checkpoint: config hash mismatch (refusing to restore)");
  const std::uint32_t len = r.u32();
  if (r.pos + len > bytes.size()) throw Error("checkpoint: truncated config text");
  r.pos += len;
  RunAccumulators acc;
  acc.steps_accepted = r.u64();
  double vals[8];
  for (double& v : vals) v = r.f64();
  acc.serrin_grad_rho = make_serrin(vals[0], vals[1], SerrinTarget::GradRho);
  acc.serrin_grad_rho.integral = vals[2];
  acc.serrin_grad_rho.sup = vals[3];
  acc.serrin_velocity = make_serrin(vals[4], vals[5], SerrinTarget::Velocity);
  acc.serrin_velocity.integral = vals[6];
  acc.serrin_velocity.sup = vals[7];

  const Grid& g = st.rho.grid();
  ScalarField uh(g, Loc::Corner), vh(g, Loc::Corner);
  std::string rest = bytes.substr(r.pos);
  std::size_t off = 0;
  auto next_block = [&](ScalarField& f) {
    const std::string block = rest.substr(off);
    SnapshotHeader h = snapshot_parse(block, f);
    auto [mx, my] = snapshot_extent(g, f.loc());
    off += 32 + std::size_t(mx) * my * 8;
    return h;
  };
  SnapshotHeader h = next_block(st.rho);
  st.t = h.t;
  next_block(uh);
  next_block(vh);
  next_block(st.pi);
  next_block(st.pi1);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) st.u.u(i, j) = uh.at(i, j);
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) st.u.v(i, j) = vh.at(i, j);
  return acc;
}

}  // namespace mc
