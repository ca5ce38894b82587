#pragma once

// Deterministic block parallelism: work is cut into fixed blocks independent of the
// thread count, and block results are combined in block order.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace toruslab {

inline unsigned thread_count() {
  if (const char* env = std::getenv("TORUSLAB_THREADS")) {
    try {
      long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(std::min<long>(v, 256));
    } catch (const std::exception&) {
    }
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1u : hc;
}

// Runs fn(block_index, begin, end) for each block of [0, n). Exceptions propagate.
template <class Fn>
void for_each_block(std::size_t n, std::size_t block, Fn&& fn) {
  if (n == 0) return;
  block = std::max<std::size_t>(block, 1);
  const std::size_t nblocks = (n + block - 1) / block;
  const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(thread_count(), nblocks));
  auto run = [&](unsigned tid, std::exception_ptr& err) {
    try {
      for (std::size_t b = tid; b < nblocks; b += nthreads) fn(b, b * block, std::min(n, (b + 1) * block));
    } catch (...) {
      err = std::current_exception();
    }
  };
  std::vector<std::exception_ptr> errs(nthreads);
  if (nthreads <= 1) {
    run(0, errs[0]);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(run, t, std::ref(errs[t]));
    for (auto& th : pool) th.join();
  }
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace toruslab
