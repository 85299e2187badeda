#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <vector>

#include "kpz2d/errors.hpp"

namespace kpz2d {

struct ExecutionPolicy {
  int workers = 1;
};

/// Runs `body(id)` for id = 0..count-1 on up to `workers` OpenMP threads and
/// returns the results in id order, independent of scheduling. The first
/// failure (lowest id among those that ran) is rethrown after all workers
/// stop; blow-ups are re-tagged with the trajectory id.
template <class Result, class Body>
std::vector<Result> run_indexed(std::size_t count, ExecutionPolicy exec, Body&& body) {
  std::vector<std::optional<Result>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<bool> abort{false};
  const long n = static_cast<long>(count);
  const int workers = exec.workers > 0 ? exec.workers : 1;
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (long i = 0; i < n; ++i) {
    if (abort.load(std::memory_order_relaxed)) continue;
    const auto id = static_cast<std::size_t>(i);
    try {
      slots[id].emplace(body(static_cast<std::uint64_t>(id)));
    } catch (const BlowUpError& e) {
      errors[id] = std::make_exception_ptr(BlowUpError(e.step(), static_cast<std::uint64_t>(id), e.detail()));
      abort.store(true, std::memory_order_relaxed);
    } catch (...) {
      errors[id] = std::current_exception();
      abort.store(true, std::memory_order_relaxed);
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace kpz2d
