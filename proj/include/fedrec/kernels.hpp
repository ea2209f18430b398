#pragma once

// Data-parallel kernels. Each has an OpenMP path and a serial reference path; the two must
// produce bit-identical results because every iteration writes only its own output slot.

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

namespace fedrec {

enum class Execution { Serial, Parallel };

/// Runs body(i) for i in [0, n). Exceptions thrown inside the parallel region are captured and
/// the first one is rethrown after the loop.
template <class Body>
void for_each_index(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::Serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Dense n x n matrix (row-major) of squared Euclidean distances.
std::vector<double> pairwise_squared_distances(const std::vector<std::span<const double>>& vectors,
                                               Execution exec);

/// Number of worker threads the parallel paths use. Honours FEDREC_WORKERS when set.
int worker_count();
void configure_workers_from_env();

}  // namespace fedrec
