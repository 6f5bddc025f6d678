#include <cstdio>
#include <iostream>

#include "machcombust/verify.hpp"

// Runs every acceptance criterion and prints one pass/fail line per criterion.
// Exit status is nonzero if any criterion fails.

int main() {
  bool all = true;
  for (int id = 1; id <= 12; ++id) {
    mc::CriterionResult r;
    try {
      r = mc::run_criterion(id);
    } catch (const std::exception& e) {
      r.id = id;
      r.name = "criterion_" + std::to_string(id);
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    std::printf("criterion %2d %-28s %s  [%s]\n", r.id, r.name.c_str(),
                r.pass ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
    all = all && r.pass;
  }
  std::printf("acceptance: %s\n", all ? "all criteria passed" : "FAILURES present");
  return all ? 0 : 1;
}
