// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "fdcf/fdcf.hpp"

#include <cstdio>
#include <vector>

int main() {
  using namespace fdcf::validation;
  std::vector<CheckResult> results = desk_suite();
  const FigureChecks fc = check_figures(50, fdcf::resolve_threads(1));
  results.push_back(fc.fig1);
  results.push_back(fc.fig2);

  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s %s: %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    failed += r.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
