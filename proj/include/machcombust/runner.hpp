#pragma once

#include <cstdlib>
#include <iostream>

#include "machcombust/config.hpp"

// Run orchestration: advance to t_end while writing the CSV time series,
// snapshots, and checkpoints, feeding the Serrin accumulators and the blowup
// monitor. Exit codes: 0 completed, 2 completed with a monitor trip annotation,
// 1 aborted.

namespace mc {

// MACHCOMBUST_THREADS caps solver parallelism. The numerics are
// single-threaded, which respects any positive cap; the value is still
// validated so misconfiguration fails loudly.
inline int solver_thread_cap() {
  const char* env = std::getenv("MACHCOMBUST_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) throw Error("MACHCOMBUST_THREADS must be a positive integer");
  return int(v);
}

struct RunOutcome {
  int exit_code = 1;
  bool monitor_tripped = false;
  std::uint64_t steps = 0;
  double t_final = 0;
  std::optional<FluidState> final_state;
  std::vector<DiagnosticsRecord> records;
};

inline RunOutcome run_simulation(const RunConfig& cfg, FluidState state, RunAccumulators acc,
                                 std::ostream& log) {
  RunOutcome out;
  std::ofstream csv;
  const bool fresh = acc.steps_accepted == 0;
  if (!cfg.csv_path.empty()) {
    csv.open(cfg.csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (!csv) {
      log << "error: cannot open CSV output: " << cfg.csv_path << "\n";
      return out;
    }
    if (fresh) csv << csv_header();
  }

  StepSink sink = [&](const FluidState& s, const FluidState& prev, const PicardReport& rep,
                      double dt) {
    serrin_accumulate(acc.serrin_grad_rho, prev, cfg.params, dt);
    serrin_accumulate(acc.serrin_velocity, prev, cfg.params, dt);
    ++acc.steps_accepted;
    DiagnosticsRecord rec = energy_record(s, prev, dt, cfg.params, rep.iterations);
    out.records.push_back(rec);
    if (csv.is_open()) csv << csv_row(rec);
    for (const auto* a : {&acc.serrin_grad_rho, &acc.serrin_velocity}) {
      BlowupStatus bs = blowup_monitor(*a, cfg.serrin_threshold);
      if (bs.tripped && !out.monitor_tripped) {
        out.monitor_tripped = true;
        log << "blowup monitor tripped at t=" << s.t << " (value " << bs.value << " >= "
            << bs.threshold << "); continuing to t_end\n";
      }
    }
    const auto n = acc.steps_accepted;
    if (cfg.snapshot_every > 0 && !cfg.snapshot_prefix.empty() &&
        n % std::uint64_t(cfg.snapshot_every) == 0) {
      const std::string tag = cfg.snapshot_prefix + std::to_string(n);
      snapshot_save(tag + "_rho.mcf", s.rho, s.t);
      snapshot_save(tag + "_pi.mcf", s.pi, s.t);
    }
    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_path.empty() &&
        n % std::uint64_t(cfg.checkpoint_every) == 0)
      checkpoint_save(cfg.checkpoint_path, cfg.source_text, s, acc);
  };

  try {
    state = advance(std::move(state), cfg.t_end, cfg.controls, cfg.params, sink);
  } catch (const Error& e) {
    log << "error: run aborted: " << e.what() << "\n";
    return out;
  }
  out.steps = acc.steps_accepted;
  out.t_final = state.t;
  out.final_state = std::move(state);
  out.exit_code = out.monitor_tripped ? 2 : 0;
  return out;
}

inline RunOutcome run_from_config(const RunConfig& cfg, std::ostream& log) {
  RunAccumulators acc;
  acc.serrin_grad_rho = make_serrin(cfg.serrin_r, cfg.serrin_s, SerrinTarget::GradRho);
  acc.serrin_velocity = make_serrin(cfg.serrin_r, cfg.serrin_s, SerrinTarget::Velocity);
  FluidState st = cfg.initial_state();
  return run_simulation(cfg, std::move(st), std::move(acc), log);
}

inline RunOutcome resume_from_checkpoint(const std::string& path, std::ostream& log) {
  const std::string text = checkpoint_config_text(path);
  RunConfig cfg = parse_config(text);
  FluidState st = cfg.initial_state();
  RunAccumulators acc = checkpoint_restore(path, cfg.hash(), st);
  apply_bc(st.rho, rho_bc(cfg.params, cfg.regime));
  if (st.t >= cfg.t_end) {
    log << "checkpoint already at or past t_end; nothing to do\n";
    RunOutcome out;
    out.exit_code = 0;
    out.steps = acc.steps_accepted;
    out.t_final = st.t;
    out.final_state = std::move(st);
    return out;
  }
  return run_simulation(cfg, std::move(st), std::move(acc), log);
}

}  // namespace mc
