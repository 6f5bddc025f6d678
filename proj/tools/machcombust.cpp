#include <CLI11.hpp>
#include <iostream>

#include "machcombust/runner.hpp"
#include "machcombust/verify.hpp"

// CLI verbs:
//   run <config>        advance a configured simulation to t_end
//   verify <suite>      run one acceptance suite (operators, elliptic,
//                       invariants, mms, ledger); exit 0 iff all pass
//   resume <checkpoint> continue a run from its self-contained checkpoint
// Exit codes for run/resume: 0 completed, 2 completed with the blowup monitor
// tripped, 1 aborted.

int main(int argc, char** argv) {
  CLI::App app{"machcombust: staggered-grid low-Mach combustion simulator"};
  app.require_subcommand(1);

  std::string config_path, suite, checkpoint_path;
  CLI::App* run = app.add_subcommand("run", "advance a simulation from a config file");
  run->add_option("config", config_path, "config file path")->required();
  CLI::App* verify = app.add_subcommand("verify", "run an acceptance suite");
  verify->add_option("suite", suite, "one of: operators, elliptic, invariants, mms, ledger")
      ->required();
  CLI::App* resume = app.add_subcommand("resume", "continue from a checkpoint");
  resume->add_option("checkpoint", checkpoint_path, "checkpoint file path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    mc::solver_thread_cap();  // validate MACHCOMBUST_THREADS up front
    if (run->parsed()) {
      mc::RunConfig cfg = mc::parse_config(mc::read_file(config_path));
      mc::RunOutcome out = mc::run_from_config(cfg, std::cerr);
      if (out.exit_code != 1)
        std::cout << "completed " << out.steps << " steps to t=" << out.t_final << "\n";
      return out.exit_code;
    }
    if (resume->parsed()) {
      mc::RunOutcome out = mc::resume_from_checkpoint(checkpoint_path, std::cerr);
      if (out.exit_code != 1)
        std::cout << "completed " << out.steps << " steps to t=" << out.t_final << "\n";
      return out.exit_code;
    }
    return mc::verify_suite(suite, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
