#include "fedrec/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fedrec/error.hpp"

namespace fedrec {

namespace {

void check_same_length(const std::vector<std::span<const double>>& vectors) {
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) throw DimensionError("vectors of unequal length");
  }
}

FlatVec weighted_mean(const std::vector<std::span<const double>>& vectors, std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  FlatVec out(vectors.front().size(), 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) axpy(weights[i] / total, vectors[i], out);
  return out;
}

double smoothed_distance(double d, double smoothing) {
  return d >= smoothing ? d : d * d / (2.0 * smoothing) + smoothing / 2.0;
}

double smoothed_objective(const std::vector<std::span<const double>>& vectors, std::span<const double> weights,
                          std::span<const double> z, double smoothing) {
  double total = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    total += weights[i] * smoothed_distance(euclidean_distance(vectors[i], z), smoothing);
  }
  return total;
}

}  // namespace

std::string to_string(DefenseType type) {
  switch (type) {
    case DefenseType::None: return "none";
    case DefenseType::GradientKrum: return "gradient_krum";
    case DefenseType::ParamKrum: return "param_krum";
    case DefenseType::Rfa: return "rfa";
    case DefenseType::TrimmedNorm: return "trimmed_norm";
    case DefenseType::TrimmedCoordinate: return "trimmed_coordinate";
  }
  return "unknown";
}

DefenseType parse_defense(const std::string& name) {
  if (name == "none") return DefenseType::None;
  if (name == "gradient_krum") return DefenseType::GradientKrum;
  if (name == "param_krum") return DefenseType::ParamKrum;
  if (name == "rfa") return DefenseType::Rfa;
  if (name == "trimmed_norm" || name == "trmean") return DefenseType::TrimmedNorm;
  if (name == "trimmed_coordinate") return DefenseType::TrimmedCoordinate;
  throw ConfigError("unknown defense: " + name);
}

void DefenseKind::validate() const {
  if (f < -1) throw ConfigError("krum f must be >= 0 (or -1 for automatic)");
  if (keep == 0 || keep < -1) throw ConfigError("krum keep must be >= 1 (or -1 for automatic)");
  if (max_iters < 1) throw ConfigError("geometric median needs max_iters >= 1");
  if (!(smoothing > 0.0)) throw ConfigError("geometric median smoothing must be positive");
  if (!(beta >= 0.0 && beta < 0.5)) throw ConfigError("trimming beta must lie in [0, 0.5)");
}

FilterResult krum_select(std::span<const int> ids, const std::vector<std::span<const double>>& vectors, int f,
                         int keep, Execution exec) {
  const auto n = static_cast<int>(vectors.size());
  if (static_cast<int>(ids.size()) != n) throw DimensionError("krum: ids and vectors differ in count");
  if (f < 0) throw ConfigError("krum: f must be non-negative");
  if (n - f - 2 < 1) {
    throw ConfigError(fmt::format("krum needs more than f + 2 clients (n' = {}, f = {})", n, f));
  }
  if (keep < 1 || keep > n - f) throw ConfigError(fmt::format("krum keep must lie in [1, {}]", n - f));
  check_same_length(vectors);

  const auto dist = pairwise_squared_distances(vectors, exec);
  const auto neighbours = static_cast<std::size_t>(n - f - 2);
  std::vector<double> scores(static_cast<std::size_t>(n));
  for_each_index(static_cast<std::size_t>(n), exec, [&](std::size_t i) {
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(n - 1));
    for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) {
      if (j != i) row.push_back(dist[i * static_cast<std::size_t>(n) + j]);
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), row.end());
    std::sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours));
    scores[i] = std::accumulate(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbours), 0.0);
  });

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return ids[a] < ids[b];
  });

  FilterResult out;
  for (std::size_t i = 0; i < order.size(); ++i) out.scores[ids[i]] = scores[i];
  for (int r = 0; r < keep; ++r) out.selected.push_back(ids[order[static_cast<std::size_t>(r)]]);
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

double weighted_distance_sum(const std::vector<std::span<const double>>& vectors, std::span<const double> weights,
                             std::span<const double> z) {
  double total = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) total += weights[i] * euclidean_distance(vectors[i], z);
  return total;
}

GeometricMedianResult geometric_median(const std::vector<std::span<const double>>& vectors,
                                       std::span<const double> weights, int max_iters, double smoothing) {
  if (vectors.empty()) throw EmptyDataError("geometric median of an empty set");
  if (weights.size() != vectors.size()) throw DimensionError("geometric median: one weight per vector");
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("geometric median weights must be positive");
  }
  check_same_length(vectors);

  GeometricMedianResult out;
  out.median = weighted_mean(vectors, weights);
  out.objective.push_back(smoothed_objective(vectors, weights, out.median, smoothing));
  if (vectors.size() == 1) return out;

  const std::size_t dim = out.median.size();
  FlatVec next(dim);
  for (int it = 0; it < max_iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const double c = weights[i] / std::max(euclidean_distance(vectors[i], out.median), smoothing);
      axpy(c, vectors[i], next);
      denom += c;
    }
    for (double& x : next) x /= denom;
    const double step = euclidean_distance(next, out.median);
    out.median.swap(next);
    out.iterations = it + 1;
    out.objective.push_back(smoothed_objective(vectors, weights, out.median, smoothing));
    if (step < 1e-10) break;
  }
  return out;
}

FilterResult trimmed_norm_filter(std::span<const int> ids, const std::vector<std::span<const double>>& thetas,
                                 double beta) {
  if (thetas.empty()) throw EmptyDataError("trimmed-norm filter on an empty set");
  if (ids.size() != thetas.size()) throw DimensionError("trimmed-norm: ids and vectors differ in count");
  if (!(beta >= 0.0 && beta < 0.5)) throw ConfigError("trimming beta must lie in [0, 0.5)");

  const std::size_t n = thetas.size();
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = norm(thetas[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (norms[a] != norms[b]) return norms[a] < norms[b];
    return ids[a] < ids[b];
  });

  const auto cut = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n)));
  FilterResult out;
  for (std::size_t i = 0; i < n; ++i) out.scores[ids[i]] = norms[i];
  if (2 * cut >= n) {
    out.selected.push_back(ids[order[n / 2]]);
    return out;
  }
  const double lo = norms[order[cut]];
  const double hi = norms[order[n - 1 - cut]];
  for (std::size_t i = 0; i < n; ++i) {
    if (norms[i] >= lo && norms[i] <= hi) out.selected.push_back(ids[i]);
  }
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

FlatVec coordinate_trimmed_mean(const std::vector<std::span<const double>>& vectors, double beta) {
  if (vectors.empty()) throw EmptyDataError("trimmed mean of an empty set");
  if (!(beta >= 0.0 && beta < 0.5)) throw ConfigError("trimming beta must lie in [0, 0.5)");
  check_same_length(vectors);
  const std::size_t n = vectors.size();
  const auto cut = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n)));
  const std::size_t kept = n - 2 * cut;
  FlatVec out(vectors.front().size());
  std::vector<double> column(n);
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) column[i] = vectors[i][k];
    std::sort(column.begin(), column.end());
    double s = 0.0;
    for (std::size_t i = cut; i < cut + kept; ++i) s += column[i];
    out[k] = s / static_cast<double>(kept);
  }
  return out;
}

Aggregate aggregate(const std::vector<const ClientPacket*>& packets, const DefenseKind& rule) {
  if (packets.empty()) throw AggregationError("cannot aggregate an empty client set");
  std::vector<double> weights;
  std::vector<std::span<const double>> ms, vs, thetas;
  for (const auto* p : packets) {
    if (p->train_count <= 0) throw AggregationError("client with non-positive training count");
    weights.push_back(static_cast<double>(p->train_count));
    ms.emplace_back(p->m);
    vs.emplace_back(p->v);
    thetas.emplace_back(p->theta);
  }
  check_same_length(thetas);

  switch (rule.type) {
    case DefenseType::Rfa:
      return {geometric_median(ms, weights, rule.max_iters, rule.smoothing).median,
              geometric_median(vs, weights, rule.max_iters, rule.smoothing).median,
              geometric_median(thetas, weights, rule.max_iters, rule.smoothing).median};
    case DefenseType::TrimmedCoordinate:
      return {coordinate_trimmed_mean(ms, rule.beta), coordinate_trimmed_mean(vs, rule.beta),
              coordinate_trimmed_mean(thetas, rule.beta)};
    default:
      return {weighted_mean(ms, weights), weighted_mean(vs, weights), weighted_mean(thetas, weights)};
  }
}

}  // namespace fedrec
