#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Acceptance criteria, grouped into the CLI verify suites. Each criterion is
// self-contained and deterministic; run_criterion executes one and returns its
// verdict with a short human-readable detail line.

namespace mc {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

const std::vector<std::string>& verify_suites();
std::vector<int> suite_criteria(const std::string& suite);  // throws on unknown suite
CriterionResult run_criterion(int id);

// Prints one pass/fail line per criterion; returns 0 iff all pass.
int verify_suite(const std::string& suite, std::ostream& out);

}  // namespace mc
