#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace rwl {

// Runs f(0..count-1) on up to `workers` threads; results are stored by index,
// so the output does not depend on scheduling. The first exception (by task
// index) is rethrown after all workers finish.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, int workers, F&& f) {
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t t = next++; t < count; t = next++) {
      try {
        out[t] = f(t);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    }
  };
  const std::size_t n = workers <= 1 ? 1 : std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  if (n <= 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace rwl
