#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "fedrec/error.hpp"
#include "fedrec/fism.hpp"
#include "fedrec/fmf.hpp"
#include "support.hpp"

using namespace fedrec;

namespace {

// Straight-line evaluation on the unflattened tables.
double naive_score(const ModelParams& m, const std::vector<int>& positives, int item, double gamma) {
  std::vector<int> history;
  for (int k : positives)
    if (k != item) history.push_back(k);
  if (history.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t c = 0; c < m.dim; ++c) {
    double agg = 0.0;
    for (int k : history) agg += m.q[static_cast<std::size_t>(k) * m.dim + c];
    s += m.p[static_cast<std::size_t>(item) * m.dim + c] * agg;
  }
  return s / std::pow(static_cast<double>(history.size()), gamma);
}

double naive_loss(const ModelParams& m, const std::vector<int>& positives, const NegativeMap& neg,
                  const LossConfig& cfg) {
  double loss = 0.0;
  for (std::size_t j = 0; j < positives.size(); ++j) {
    const double yj = naive_score(m, positives, positives[j], cfg.gamma);
    for (int k : neg[j]) {
      const double diff = yj - naive_score(m, positives, k, cfg.gamma);
      loss += -std::log(1.0 / (1.0 + std::exp(-diff)));
    }
  }
  double sq = 0.0;
  for (double x : m.p) sq += x * x;
  for (double x : m.q) sq += x * x;
  return loss + cfg.lambda * std::sqrt(sq);
}

struct Instance {
  Shape shape;
  FlatVec theta;
  ClientDataset data;
  NegativeMap negatives;
};

Instance random_instance(std::mt19937_64& rng, std::size_t items, std::size_t dim) {
  Instance in;
  in.shape = {items, dim};
  in.theta = testing::gaussian(rng, in.shape.size(), 0.5);
  std::vector<int> positives;
  std::bernoulli_distribution take(0.4);
  for (int j = 0; j < static_cast<int>(items); ++j)
    if (take(rng)) positives.push_back(j);
  if (positives.size() < 2) positives = {0, 1};
  if (positives.size() == items) positives.pop_back();
  in.data = make_client_dataset(0, positives, items);
  in.negatives = sample_negatives(in.data, 2, rng());
  return in;
}

}  // namespace

TEST_CASE("predict: zero embeddings score zero") {
  const FlatVec theta(Shape{4, 3}.size(), 0.0);
  const auto data = make_client_dataset(0, {0, 2}, 4);
  const ParamsView view(theta, Shape{4, 3});
  for (int j = 0; j < 4; ++j) CHECK(predict(view, data, j, LossConfig{}) == 0.0);
}

TEST_CASE("predict: single-item history reduces to p_j . q_k") {
  std::mt19937_64 rng(1);
  const Shape shape{3, 4};
  const auto theta = testing::gaussian(rng, shape.size());
  const ParamsView view(theta, shape);
  const auto data = make_client_dataset(0, {2}, 3);
  CHECK(predict(view, data, 0, LossConfig{}) == doctest::Approx(dot(view.p_row(0), view.q_row(2))).epsilon(1e-15));
}

TEST_CASE("predict: a positive excludes itself from its history") {
  std::mt19937_64 rng(2);
  const Shape shape{3, 4};
  const auto theta = testing::gaussian(rng, shape.size());
  const ParamsView view(theta, shape);
  const auto data = make_client_dataset(0, {0, 1}, 3);
  CHECK(predict(view, data, 0, LossConfig{}) == doctest::Approx(dot(view.p_row(0), view.q_row(1))).epsilon(1e-15));
  CHECK_THROWS_AS(predict(view, data, 3, LossConfig{}), IndexError);
}

TEST_CASE("predict_all agrees with the naive score") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = random_instance(rng, 9, 3);
    const auto m = unflatten(in.theta, in.shape);
    LossConfig cfg;
    cfg.gamma = 0.5;
    const auto all = predict_all(ParamsView(in.theta, in.shape), in.data, cfg);
    for (int j = 0; j < 9; ++j) CHECK(testing::rel_err(all[j], naive_score(m, in.data.positives, j, 0.5)) <= 1e-12);
  }
}

TEST_CASE("client_loss: zero embeddings give log 2 per pair") {
  const Shape shape{3, 2};
  const FlatVec theta(shape.size(), 0.0);
  const auto data = make_client_dataset(0, {0}, 3);
  const NegativeMap neg{{1}};
  LossConfig cfg;
  cfg.lambda = 0.0;
  CHECK(client_loss(ParamsView(theta, shape), data, neg, cfg) == doctest::Approx(0.693147).epsilon(1e-6));
  cfg.lambda = 0.5;
  const NegativeMap two{{1, 2}};
  CHECK(client_loss(ParamsView(theta, shape), data, two, cfg) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("client_loss matches the straight-line oracle") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const auto in = random_instance(rng, 8, 3);
    LossConfig cfg;
    cfg.lambda = 0.1;
    const double got = client_loss(ParamsView(in.theta, in.shape), in.data, in.negatives, cfg);
    CHECK(testing::rel_err(got, naive_loss(unflatten(in.theta, in.shape), in.data.positives, in.negatives, cfg)) <=
          1e-12);
  }
}

TEST_CASE("client_loss rejects empty positives") {
  const Shape shape{3, 2};
  const FlatVec theta(shape.size(), 0.1);
  ClientDataset empty;
  CHECK_THROWS_AS(client_loss(ParamsView(theta, shape), empty, {}, LossConfig{}), EmptyDataError);
}

TEST_CASE("client_gradient: regularizer-only case is lambda theta / |theta|") {
  // With no sampled negatives the pairwise term vanishes and only the norm has slope.
  std::mt19937_64 rng(5);
  const Shape shape{3, 2};
  const auto theta = testing::gaussian(rng, shape.size());
  const auto data = make_client_dataset(0, {0}, 3);
  LossConfig cfg;
  cfg.lambda = 0.3;
  const auto g = client_gradient(ParamsView(theta, shape), data, NegativeMap{{}}, cfg);
  const double n = norm(theta);
  for (std::size_t i = 0; i < theta.size(); ++i) CHECK(g[i] == doctest::Approx(0.3 * theta[i] / n).epsilon(1e-14));
}

TEST_CASE("client_gradient vs central finite differences") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = random_instance(rng, 3 + trial % 3, 2);
    LossConfig cfg;
    cfg.lambda = 0.05;
    cfg.gamma = trial % 2 ? 1.0 : 0.5;
    const auto g = client_gradient(ParamsView(in.theta, in.shape), in.data, in.negatives, cfg);
    const double h = 1e-5;
    for (std::size_t i = 0; i < in.theta.size(); ++i) {
      auto plus = in.theta, minus = in.theta;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (naive_loss(unflatten(plus, in.shape), in.data.positives, in.negatives, cfg) -
                         naive_loss(unflatten(minus, in.shape), in.data.positives, in.negatives, cfg)) /
                        (2 * h);
      CHECK(std::abs(g[i] - fd) <= 1e-5 * std::max({1e-3, std::abs(g[i]), std::abs(fd)}));
    }
  }
}

TEST_CASE("client_gradient at zero embeddings matches finite differences") {
  const Shape shape{3, 2};
  const FlatVec theta(shape.size(), 0.0);
  const auto data = make_client_dataset(0, {0, 1}, 3);
  const NegativeMap neg{{2}, {2}};
  LossConfig cfg;
  cfg.lambda = 0.0;
  const auto g = client_gradient(ParamsView(theta, shape), data, neg, cfg);
  const double h = 1e-5;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto plus = theta, minus = theta;
    plus[i] += h;
    minus[i] -= h;
    const double fd = (naive_loss(unflatten(plus, shape), data.positives, neg, cfg) -
                       naive_loss(unflatten(minus, shape), data.positives, neg, cfg)) /
                      (2 * h);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("sample_negatives draws distinct candidates and is seeded") {
  const auto data = make_client_dataset(0, {1, 4}, 10, {7});
  const auto a = sample_negatives(data, 3, 99);
  CHECK(a == sample_negatives(data, 3, 99));
  for (const auto& row : a) {
    REQUIRE(row.size() == 3);
    const std::set<int> s(row.begin(), row.end());
    CHECK(s.size() == 3);
    for (int k : row) {
      CHECK_FALSE(data.contains_positive(k));
      CHECK(k != 7);
    }
  }
  const auto all = sample_negatives(data, 100, 1);
  for (const auto& row : all) CHECK(std::set<int>(row.begin(), row.end()).size() == data.candidate_negatives.size());
}

TEST_CASE("log-sigmoid helpers are stable") {
  CHECK(log_sigmoid_loss(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(std::isfinite(log_sigmoid_loss(-800.0)));
  CHECK(log_sigmoid_loss(-800.0) == doctest::Approx(800.0));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("fmf gradient vs central finite differences") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto in = random_instance(rng, 5, 3);
    auto user = testing::gaussian(rng, 3);
    LossConfig cfg;
    cfg.lambda = 0.05;
    const auto g = fmf_client_gradient(ParamsView(in.theta, in.shape), user, in.data, in.negatives, cfg);
    const double h = 1e-6;
    auto loss_at = [&](const FlatVec& th, const std::vector<double>& u) {
      return fmf_client_loss(ParamsView(th, in.shape), u, in.data, in.negatives, cfg);
    };
    for (std::size_t i = 0; i < in.theta.size(); ++i) {
      auto plus = in.theta, minus = in.theta;
      plus[i] += h;
      minus[i] -= h;
      const double fd = (loss_at(plus, user) - loss_at(minus, user)) / (2 * h);
      CHECK(std::abs(g.items[i] - fd) <= 1e-5 * std::max({1e-3, std::abs(fd)}));
    }
    for (std::size_t c = 0; c < user.size(); ++c) {
      auto plus = user, minus = user;
      plus[c] += h;
      minus[c] -= h;
      const double fd = (loss_at(in.theta, plus) - loss_at(in.theta, minus)) / (2 * h);
      CHECK(std::abs(g.user[c] - fd) <= 1e-5 * std::max({1e-3, std::abs(fd)}));
    }
  }
}

TEST_CASE("fmf predict is the user-item inner product") {
  const Shape shape{2, 2};
  const FlatVec theta{1, 2, 3, 4, 0, 0, 0, 0};
  const std::vector<double> user{1, -1};
  CHECK(fmf_predict(ParamsView(theta, shape), user, 1) == -1.0);
  CHECK(fmf_predict_all(ParamsView(theta, shape), user) == std::vector<double>{-1.0, -1.0});
}
