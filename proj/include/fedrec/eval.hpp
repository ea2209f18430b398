#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fedrec/kernels.hpp"

namespace fedrec {

inline constexpr int kMaxK = 5;

struct MetricReport {
  std::vector<double> precision_at;  // index K-1
  std::vector<double> recall_at;
  int users_evaluated = 0;

  double precision(int k) const { return precision_at.at(static_cast<std::size_t>(k - 1)); }
  double recall(int k) const { return recall_at.at(static_cast<std::size_t>(k - 1)); }
};

/// Items outside `train` ordered by score descending, ties by ascending id. `train` is sorted.
std::vector<int> rank_items(std::span<const double> scores, std::span<const int> train);

/// Per-user hits of the top-K against the (sorted) test set, averaged over users. Users with
/// empty test sets are skipped.
MetricReport precision_recall(const std::vector<std::vector<int>>& rankings,
                              const std::vector<std::vector<int>>& tests, int max_k = kMaxK);

struct EvalUser {
  int client_id = 0;
  std::span<const int> train;
  std::span<const int> test;
};

/// Ranks every user with `scores(client_id)` (in parallel when asked) and reports the metrics.
MetricReport evaluate(const std::vector<EvalUser>& users, const std::function<std::vector<double>(int)>& scores,
                      int max_k = kMaxK, Execution exec = Execution::Serial);

}  // namespace fedrec
