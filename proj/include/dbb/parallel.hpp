#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dbb::parallel {

// Order-preserving parallel map over an index range. Workers claim indices
// from a shared counter; the first exception is rethrown after all workers
// join, so every started item either finishes or never began.
template <typename Fn>
void for_each_index(std::size_t count, int workers, Fn fn) {
  if (count == 0) return;
  int n_workers = workers;
  if (n_workers < 1) n_workers = 1;
  if (static_cast<std::size_t>(n_workers) > count)
    n_workers = static_cast<int>(count);

  if (n_workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto body = [&]() {
    while (!failed.load()) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace dbb::parallel
