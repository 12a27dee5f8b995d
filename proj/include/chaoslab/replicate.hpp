#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "chaoslab/error.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab {

/// Replication budget shared by every estimator: `replications` independent
/// draws, replication i using `rng.at(i)`. `threads <= 0` means one worker
/// per hardware thread. Results never depend on `threads`.
struct RunSpec {
  std::size_t replications = 1000;
  RngStream rng;
  int threads = 1;
};

int resolve_threads(int requested);

/// Runs fn(stream) for every replication and returns the results in
/// replication order. The first failing replication (lowest index) is
/// rethrown as EvaluationError carrying its stream descriptor.
template <class Fn>
auto replicate(const RunSpec& spec, Fn&& fn) -> std::vector<decltype(fn(std::declval<const RngStream&>()))> {
  using R = decltype(fn(std::declval<const RngStream&>()));
  const std::size_t n = spec.replications;
  std::vector<R> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  // Indices are claimed in increasing order, so every replication below the
  // first failure still runs and the reported failure is thread-independent.
  std::atomic<std::size_t> first_failure{n};

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || i > first_failure.load()) return;
      try {
        results[i] = fn(spec.rng.at(i));
      } catch (...) {
        errors[i] = std::current_exception();
        std::size_t cur = first_failure.load();
        while (i < cur && !first_failure.compare_exchange_weak(cur, i)) {
        }
      }
    }
  };

  const int threads = std::min<int>(resolve_threads(spec.threads), static_cast<int>(std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const EvaluationError&) {
      throw;
    } catch (const std::exception& e) {
      throw EvaluationError(e.what(), spec.rng.at(i).describe());
    }
  }
  return results;
}

}  // namespace chaoslab
