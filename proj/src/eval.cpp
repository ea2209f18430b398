#include "fedrec/eval.hpp"

#include <algorithm>
#include <numeric>

#include "fedrec/error.hpp"

namespace fedrec {

std::vector<int> rank_items(std::span<const double> scores, std::span<const int> train) {
  std::vector<int> items;
  items.reserve(scores.size());
  for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
    if (!std::binary_search(train.begin(), train.end(), i)) items.push_back(i);
  }
  std::stable_sort(items.begin(), items.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return items;
}

MetricReport precision_recall(const std::vector<std::vector<int>>& rankings,
                              const std::vector<std::vector<int>>& tests, int max_k) {
  if (rankings.size() != tests.size()) throw DimensionError("one ranking per test set");
  if (max_k < 1) throw ConfigError("max K must be positive");
  MetricReport out;
  out.precision_at.assign(static_cast<std::size_t>(max_k), 0.0);
  out.recall_at.assign(static_cast<std::size_t>(max_k), 0.0);
  for (std::size_t u = 0; u < tests.size(); ++u) {
    const auto& test = tests[u];
    if (test.empty()) continue;
    ++out.users_evaluated;
    int hits = 0;
    for (int k = 1; k <= max_k; ++k) {
      const auto idx = static_cast<std::size_t>(k - 1);
      if (idx < rankings[u].size() && std::binary_search(test.begin(), test.end(), rankings[u][idx])) ++hits;
      out.precision_at[idx] += static_cast<double>(hits) / k;
      out.recall_at[idx] += static_cast<double>(hits) / static_cast<double>(test.size());
    }
  }
  if (out.users_evaluated == 0) throw EmptyDataError("no users with test positives to evaluate");
  for (std::size_t k = 0; k < out.precision_at.size(); ++k) {
    out.precision_at[k] /= out.users_evaluated;
    out.recall_at[k] /= out.users_evaluated;
  }
  return out;
}

MetricReport evaluate(const std::vector<EvalUser>& users, const std::function<std::vector<double>(int)>& scores,
                      int max_k, Execution exec) {
  std::vector<std::vector<int>> rankings(users.size());
  std::vector<std::vector<int>> tests(users.size());
  for_each_index(users.size(), exec, [&](std::size_t u) {
    auto ranked = rank_items(scores(users[u].client_id), users[u].train);
    if (ranked.size() > static_cast<std::size_t>(max_k)) ranked.resize(static_cast<std::size_t>(max_k));
    rankings[u] = std::move(ranked);
    tests[u].assign(users[u].test.begin(), users[u].test.end());
  });
  return precision_recall(rankings, tests, max_k);
}

}  // namespace fedrec
