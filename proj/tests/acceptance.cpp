// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <iostream>

#include "toruslab/acceptance.hpp"

int main() {
  namespace acc = toruslab::acceptance;
  const auto all = acc::criteria();
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto res = acc::run_timed(all[i], static_cast<int>(i + 1));
    std::cout << acc::format_line(res) << std::endl;
    failed += res.pass() ? 0 : 1;
  }
  std::cout << (all.size() - failed) << "/" << all.size() << " criteria pass" << std::endl;
  return failed == 0 ? 0 : 1;
}
