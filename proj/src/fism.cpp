#include "fedrec/fism.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fedrec/error.hpp"
#include "fedrec/rng.hpp"

namespace fedrec {

namespace {

void check_item(const ParamsView& params, int item) {
  if (item < 0 || static_cast<std::size_t>(item) >= params.num_items()) {
    throw IndexError(fmt::format("item id {} outside [0, {})", item, params.num_items()));
  }
}

void check_inputs(const ParamsView& params, const ClientDataset& data, const NegativeMap& negatives) {
  if (data.positives.empty()) {
    throw EmptyDataError(fmt::format("client {} has no positives", data.client_id));
  }
  if (negatives.size() != data.positives.size()) {
    throw DimensionError("negative map must have one entry per positive");
  }
  for (int j : data.positives) check_item(params, j);
  for (const auto& row : negatives) {
    for (int k : row) check_item(params, k);
  }
}

double history_scale(std::size_t history_size, double gamma) {
  return std::pow(static_cast<double>(history_size), -gamma);
}

// Sum of q rows over all positives, in positive order.
std::vector<double> history_sum(const ParamsView& params, const ClientDataset& data) {
  std::vector<double> sum(params.dim(), 0.0);
  for (int k : data.positives) axpy(1.0, params.q_row(static_cast<std::size_t>(k)), sum);
  return sum;
}

}  // namespace

bool ClientDataset::contains_positive(int item) const {
  return std::binary_search(positives.begin(), positives.end(), item);
}

ClientDataset make_client_dataset(int client_id, std::vector<int> positives, std::size_t num_items,
                                  const std::vector<int>& excluded) {
  std::sort(positives.begin(), positives.end());
  positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
  std::vector<char> blocked(num_items, 0);
  for (int j : positives) {
    if (j < 0 || static_cast<std::size_t>(j) >= num_items) {
      throw IndexError(fmt::format("item id {} outside [0, {})", j, num_items));
    }
    blocked[static_cast<std::size_t>(j)] = 1;
  }
  for (int j : excluded) {
    if (j >= 0 && static_cast<std::size_t>(j) < num_items) blocked[static_cast<std::size_t>(j)] = 1;
  }
  ClientDataset data;
  data.client_id = client_id;
  data.train_count = static_cast<int>(positives.size());
  data.positives = std::move(positives);
  for (std::size_t j = 0; j < num_items; ++j) {
    if (!blocked[j]) data.candidate_negatives.push_back(static_cast<int>(j));
  }
  return data;
}

void LossConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (negatives_per_positive < 1) throw ConfigError("negatives_per_positive must be positive");
}

NegativeMap sample_negatives(const ClientDataset& data, int per_positive, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> pool = data.candidate_negatives;
  const std::size_t take = std::min(pool.size(), static_cast<std::size_t>(std::max(per_positive, 0)));
  NegativeMap out(data.positives.size());
  for (auto& row : out) {
    // Partial Fisher-Yates over the shared pool; order of the pool carries over between rows,
    // which is still a uniform draw for each row.
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    row.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid_loss(double x) {
  // log(1 + exp(-x))
  if (x > 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

double predict(const ParamsView& params, const ClientDataset& data, int item, const LossConfig& cfg) {
  check_item(params, item);
  std::vector<double> user(params.dim(), 0.0);
  std::size_t history = 0;
  for (int k : data.positives) {
    if (k == item) continue;
    check_item(params, k);
    axpy(1.0, params.q_row(static_cast<std::size_t>(k)), user);
    ++history;
  }
  if (history == 0) return 0.0;
  const double scale = history_scale(history, cfg.gamma);
  for (double& x : user) x *= scale;
  return dot(params.p_row(static_cast<std::size_t>(item)), user);
}

std::vector<double> predict_all(const ParamsView& params, const ClientDataset& data, const LossConfig& cfg) {
  std::vector<double> scores(params.num_items(), 0.0);
  if (data.positives.empty()) return scores;
  for (int k : data.positives) check_item(params, k);
  std::vector<double> user = history_sum(params, data);
  const double scale = history_scale(data.positives.size(), cfg.gamma);
  for (double& x : user) x *= scale;
  for (std::size_t j = 0; j < params.num_items(); ++j) {
    if (data.contains_positive(static_cast<int>(j))) {
      scores[j] = predict(params, data, static_cast<int>(j), cfg);
    } else {
      scores[j] = dot(params.p_row(j), user);
    }
  }
  return scores;
}

double client_loss(const ParamsView& params, const ClientDataset& data, const NegativeMap& negatives,
                   const LossConfig& cfg) {
  check_inputs(params, data, negatives);
  const std::size_t d = params.dim();
  const std::size_t n = data.positives.size();
  const std::vector<double> total = history_sum(params, data);

  std::vector<double> user_all(total);
  const double scale_all = history_scale(n, cfg.gamma);
  for (double& x : user_all) x *= scale_all;

  double loss = 0.0;
  std::vector<double> user(d);
  for (std::size_t a = 0; a < n; ++a) {
    const auto j = static_cast<std::size_t>(data.positives[a]);
    double y_pos = 0.0;
    if (n >= 2) {
      const double scale = history_scale(n - 1, cfg.gamma);
      const auto qj = params.q_row(j);
      for (std::size_t c = 0; c < d; ++c) user[c] = scale * (total[c] - qj[c]);
      y_pos = dot(params.p_row(j), user);
    }
    for (int k : negatives[a]) {
      const double y_neg = dot(params.p_row(static_cast<std::size_t>(k)), user_all);
      loss += log_sigmoid_loss(y_pos - y_neg);
    }
  }
  return loss + cfg.lambda * norm(params.flat());
}

FlatVec client_gradient(const ParamsView& params, const ClientDataset& data, const NegativeMap& negatives,
                        const LossConfig& cfg) {
  check_inputs(params, data, negatives);
  const Shape shape = params.shape();
  const std::size_t d = shape.dim;
  const std::size_t n = data.positives.size();
  FlatVec grad(shape.size(), 0.0);
  auto grad_p = [&](std::size_t item) { return std::span<double>(grad.data() + item * d, d); };
  auto grad_q = [&](std::size_t item) {
    return std::span<double>(grad.data() + shape.table_size() + item * d, d);
  };

  const std::vector<double> total = history_sum(params, data);
  const double scale_all = history_scale(n, cfg.gamma);
  std::vector<double> user_all(total);
  for (double& x : user_all) x *= scale_all;

  // d loss / d q_m for m in S is (sum_j a_j) - a_m + b, with
  //   a_j = c_j * p_j * sum_{k in neg(j)} dL/dy_j   (only when the history S\{j} is non-empty)
  //   b   = n^-gamma * sum_{pairs} dL/dy_k * p_k
  std::vector<std::vector<double>> a_terms(n, std::vector<double>(d, 0.0));
  std::vector<double> a_sum(d, 0.0);
  std::vector<double> b(d, 0.0);
  std::vector<double> user(d, 0.0);

  for (std::size_t a = 0; a < n; ++a) {
    const auto j = static_cast<std::size_t>(data.positives[a]);
    const auto pj = params.p_row(j);
    double y_pos = 0.0;
    const bool has_history = n >= 2;
    const double scale = has_history ? history_scale(n - 1, cfg.gamma) : 0.0;
    if (has_history) {
      const auto qj = params.q_row(j);
      for (std::size_t c = 0; c < d; ++c) user[c] = scale * (total[c] - qj[c]);
      y_pos = dot(pj, user);
    }
    double dy_pos = 0.0;
    for (int k_id : negatives[a]) {
      const auto k = static_cast<std::size_t>(k_id);
      const auto pk = params.p_row(k);
      const double y_neg = dot(pk, user_all);
      // dL/d(diff) = -(1 - sigmoid(diff)) = -sigmoid(-diff)
      const double w = sigmoid(-(y_pos - y_neg));
      dy_pos -= w;
      axpy(w, user_all, grad_p(k));
      axpy(w * scale_all, pk, b);
    }
    if (has_history) {
      axpy(dy_pos, user, grad_p(j));
      auto& term = a_terms[a];
      for (std::size_t c = 0; c < d; ++c) term[c] = dy_pos * scale * pj[c];
      axpy(1.0, term, a_sum);
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    auto gq = grad_q(static_cast<std::size_t>(data.positives[a]));
    for (std::size_t c = 0; c < d; ++c) gq[c] += a_sum[c] - a_terms[a][c] + b[c];
  }

  if (cfg.lambda > 0.0) {
    const double theta_norm = norm(params.flat());
    if (theta_norm > 0.0) axpy(cfg.lambda / theta_norm, params.flat(), grad);
  }
  return grad;
}

}  // namespace fedrec
