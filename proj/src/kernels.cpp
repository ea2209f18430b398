#include "fedrec/kernels.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

#include "fedrec/error.hpp"
#include "fedrec/params.hpp"

namespace fedrec {

std::vector<double> pairwise_squared_distances(const std::vector<std::span<const double>>& vectors,
                                               Execution exec) {
  const std::size_t n = vectors.size();
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) throw DimensionError("pairwise distances: ragged input");
  }
  std::vector<double> out(n * n, 0.0);
  // Upper triangle rows are independent; the mirror write happens in the same iteration.
  for_each_index(n, exec, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(vectors[i], vectors[j]);
      out[i * n + j] = d;
      out[j * n + i] = d;
    }
  });
  return out;
}

int worker_count() { return omp_get_max_threads(); }

void configure_workers_from_env() {
  if (const char* env = std::getenv("FEDREC_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) omp_set_num_threads(n);
    } catch (const std::exception&) {
      throw ConfigError(std::string("FEDREC_WORKERS is not an integer: ") + env);
    }
  }
}

}  // namespace fedrec
