#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace cptmarl {

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Indices are split
/// into contiguous blocks; the first exception (by index) is rethrown after
/// all workers finish.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (n <= 0) return;
  workers = std::clamp(workers, 1, n);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto run = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run(0, n);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      const int begin = n * w / workers;
      const int end = n * (w + 1) / workers;
      threads.emplace_back(run, begin, end);
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cptmarl
