#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace constory {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
// captured per index and returned; a null entry means fn(i) completed.
template <typename F>
std::vector<std::exception_ptr> parallel_for(std::size_t n, std::size_t workers, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run();
    return errors;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run);
  for (auto& t : threads) t.join();
  return errors;
}

}  // namespace constory
