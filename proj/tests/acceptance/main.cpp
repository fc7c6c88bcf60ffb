// Runs every acceptance criterion and exits nonzero if any fails.
// Usage: acceptance [criterion ids...]

#include <cstdlib>
#include <iostream>
#include <set>

#include "acceptance/acceptance_suite.hpp"

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const auto results = acceptance::run({}, only, std::cout);
  bool all = true;
  for (const auto& r : results) all = all && r.pass;
  std::cout << (all ? "ALL PASS" : "SOME FAILED") << std::endl;
  return all ? 0 : 1;
}
