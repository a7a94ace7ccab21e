#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dynsync {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;  // filled on failure
};

// end-to-end consistency checks over every module; deterministic
std::vector<CheckResult> run_selftest_checks(int threads = 1);

// prints one [PASS]/[FAIL] line per check plus a summary, true iff all pass
bool run_selftest(int threads, std::ostream& os);

}  // namespace dynsync
