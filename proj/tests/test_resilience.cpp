#include <doctest.h>

#include <cmath>
#include <random>

#include "fedrec/data.hpp"
#include "fedrec/resilience.hpp"
#include "support.hpp"

using namespace fedrec;

namespace {

ClientRound honest(int id, const ServerState& state, std::span<const double> g, const OptimConfig& cfg,
                   OptimizerKind kind, bool byzantine = false) {
  ClientRound c;
  c.client_id = id;
  c.byzantine = byzantine;
  c.sampled = true;
  c.true_gradient.assign(g.begin(), g.end());
  c.packet = byzantine ? gradient_ascent(state, g, cfg, kind) : optimizer_update(kind, state, g, cfg);
  c.packet.client_id = id;
  const auto rec = recover_gradient(c.packet, state, cfg, kind);
  c.verified = rec.valid && verify_rules(c.packet, state, rec.g, cfg, kind);
  c.recovered = rec.g;
  return c;
}

double naive_distance(const FlatVec& a, const FlatVec& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

struct Round {
  ServerState state;
  std::vector<ClientRound> clients;
  RoundData data;
};

// Fills in place: RoundData points into the Round.
void random_round(Round& r, std::mt19937_64& rng, OptimizerKind kind, const OptimConfig& cfg, int round,
                  double v_floor = 0.0) {
  r.state = testing::random_state(rng, 12, round - 1);
  for (auto& x : r.state.v_bar) x += v_floor;
  if (kind == OptimizerKind::SgdMomentum) r.state.v_bar.assign(12, 0.0);
  for (int id = 0; id < 6; ++id) {
    r.clients.push_back(honest(id, r.state, testing::gaussian(rng, 12), cfg, kind, id < 2));
  }
  r.data.round = round;
  r.data.prior = &r.state;
  for (const auto& c : r.clients) {
    if (c.client_id % 2 == 0) r.data.selected.push_back(&c);
    if (!c.byzantine) r.data.benign.push_back(&c);
  }
}

Federation small_federation(OptimizerKind kind, AttackType attack, DefenseType defense) {
  const auto data = split(synthesize(30, 30, 3, 0.2, 8), 0.8, 8);
  FederationConfig cfg;
  cfg.total_clients = 30;
  cfg.byzantine_fraction = 0.3;
  cfg.seed = 8;
  cfg.optimizer = kind;
  cfg.attack.type = attack;
  cfg.defense.type = defense;
  cfg.defense.keep = 4;
  OptimConfig optim;
  optim.eta = 0.05;
  LossConfig loss;
  loss.negatives_per_positive = 50;
  return Federation(cfg, optim, loss, Shape{30, 4}, make_client_datasets(data));
}

}  // namespace

TEST_CASE("accumulate matches a double-loop oracle") {
  std::mt19937_64 rng(1);
  const OptimConfig cfg;
  for (int trial = 0; trial < 10; ++trial) {
    Round r;
    random_round(r, rng, OptimizerKind::Adam, cfg, 5);
    ResilienceLedger ledger;
    accumulate(ledger, r.data);
    double g = 0, m = 0, v = 0, th = 0;
    for (const auto* i : r.data.selected) {
      for (const auto* j : r.data.benign) {
        g += naive_distance(i->recovered, j->recovered);
        m += naive_distance(i->packet.m, j->packet.m);
        v += naive_distance(i->packet.v, j->packet.v);
        th += naive_distance(i->packet.theta, j->packet.theta);
      }
    }
    CHECK(testing::rel_err(ledger.sum_g, g) <= 1e-12);
    CHECK(testing::rel_err(ledger.sum_m, m) <= 1e-12);
    CHECK(testing::rel_err(ledger.sum_v, v) <= 1e-12);
    CHECK(testing::rel_err(ledger.sum_theta, th) <= 1e-12);
  }
}

TEST_CASE("single pair increments equal the pair distances") {
  std::mt19937_64 rng(2);
  const OptimConfig cfg;
  const auto state = testing::random_state(rng, 5, 2);
  const auto a = honest(0, state, testing::gaussian(rng, 5), cfg, OptimizerKind::Adam);
  const auto b = honest(1, state, testing::gaussian(rng, 5), cfg, OptimizerKind::Adam);
  RoundData data{3, &state, {&a}, {&b}};
  ResilienceLedger ledger;
  accumulate(ledger, data);
  CHECK(ledger.sum_g == euclidean_distance(a.recovered, b.recovered));
  CHECK(ledger.sum_theta == euclidean_distance(a.packet.theta, b.packet.theta));
}

TEST_CASE("identical benign clients give zero increments and zero-sided checks") {
  std::mt19937_64 rng(3);
  const OptimConfig cfg;
  for (auto kind : {OptimizerKind::Adam, OptimizerKind::SgdMomentum, OptimizerKind::AdaGrad, OptimizerKind::RmsProp}) {
    auto state = testing::random_state(rng, 6, 5);
    if (kind == OptimizerKind::SgdMomentum) state.v_bar.assign(6, 0.0);
    const auto g = testing::gaussian(rng, 6);
    const auto a = honest(0, state, g, cfg, kind), b = honest(1, state, g, cfg, kind);
    RoundData data{6, &state, {&a, &b}, {&a, &b}};
    ResilienceLedger ledger;
    observe_witnesses(ledger, data);
    accumulate(ledger, data);
    CHECK(ledger.sum_g == 0.0);
    CHECK(ledger.sum_m == 0.0);
    CHECK(ledger.sum_v == 0.0);
    CHECK(ledger.sum_theta == 0.0);
    const auto report = check_chain(kind, data, ledger, cfg);
    CHECK(report.violations.empty());
    CHECK(report.checked > 0);
  }
}

TEST_CASE("chain checks hold on random rounds for every optimizer") {
  std::mt19937_64 rng(4);
  OptimConfig cfg;
  cfg.eta = 0.02;
  for (auto kind : {OptimizerKind::Adam, OptimizerKind::SgdMomentum, OptimizerKind::AdaGrad, OptimizerKind::RmsProp}) {
    for (int trial = 0; trial < 20; ++trial) {
      Round r;
      random_round(r, rng, kind, cfg, 5, 0.05);  // positive lower-bound witness
      ResilienceLedger ledger;
      ledger.warmup = 3;
      observe_witnesses(ledger, r.data);
      REQUIRE(ledger.has_v_min());
      const auto report = check_chain(kind, r.data, ledger, cfg);
      CHECK(report.violations.empty());
      CHECK(report.skipped == 0);
    }
  }
}

TEST_CASE("sgdm identity against a scalar oracle") {
  // With one coordinate, |m_i - m_j| = |g_i - g_j| and |theta_i - theta_j| = eta |m_i - m_j|.
  OptimConfig cfg;
  cfg.eta = 0.3;
  const ServerState state{{0.7}, {0.0}, {1.0}, 4};
  const auto a = honest(0, state, FlatVec{2.0}, cfg, OptimizerKind::SgdMomentum);
  const auto b = honest(1, state, FlatVec{-0.5}, cfg, OptimizerKind::SgdMomentum);
  CHECK(std::abs(a.packet.m[0] - b.packet.m[0]) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(std::abs(a.packet.theta[0] - b.packet.theta[0]) == doctest::Approx(0.75).epsilon(1e-14));
  RoundData data{5, &state, {&a}, {&b}};
  CHECK(check_sgdm_chain(data, ResilienceLedger{}, cfg).violations.empty());
}

TEST_CASE("chain checks detect a broken identity") {
  std::mt19937_64 rng(5);
  const OptimConfig cfg;
  const auto state = testing::random_state(rng, 4, 2);
  auto a = honest(0, state, testing::gaussian(rng, 4), cfg, OptimizerKind::Adam);
  const auto b = honest(1, state, testing::gaussian(rng, 4), cfg, OptimizerKind::Adam);
  a.packet.m[0] += 1.0;
  RoundData data{3, &state, {&a}, {&b}};
  ResilienceLedger ledger;
  observe_witnesses(ledger, data);
  const auto report = check_adam_chain(data, ledger, cfg);
  REQUIRE_FALSE(report.violations.empty());
  CHECK(report.violations.front().name == "adam.m_identity");
}

TEST_CASE("gradient krum run: sum_m / sum_g stays 1 - beta1") {
  auto fed = small_federation(OptimizerKind::Adam, AttackType::GradientAscent, DefenseType::GradientKrum);
  ResilienceLedger ledger;
  ChainReport all;
  for (int t = 0; t < 10; ++t) {
    fed.run_round();
    observe_witnesses(ledger, fed.last_round());
    all.merge(check_chain(OptimizerKind::Adam, fed.last_round(), ledger, fed.optim()));
    accumulate(ledger, fed.last_round());
    REQUIRE(ledger.sum_g > 0.0);
    CHECK(ledger.sum_m / ledger.sum_g == doctest::Approx(1.0 - fed.optim().beta1).epsilon(1e-9));
  }
  CHECK(all.violations.empty());
}

TEST_CASE("undefended gradient ascent: identities hold while sum_g keeps growing") {
  auto fed = small_federation(OptimizerKind::Adam, AttackType::GradientAscent, DefenseType::None);
  ResilienceLedger ledger;
  ChainReport all;
  std::vector<double> sums;
  for (int t = 0; t < 20; ++t) {
    fed.run_round();
    observe_witnesses(ledger, fed.last_round());
    all.merge(check_chain(OptimizerKind::Adam, fed.last_round(), ledger, fed.optim()));
    accumulate(ledger, fed.last_round());
    sums.push_back(ledger.sum_g);
  }
  CHECK(all.violations.empty());
  // Least-squares slope over the run.
  double mt = 9.5, ms = 0;
  for (double s : sums) ms += s / 20;
  double num = 0, den = 0;
  for (int t = 0; t < 20; ++t) num += (t - mt) * (sums[t] - ms), den += (t - mt) * (t - mt);
  CHECK(num / den > 0.0);
  CHECK(sums.back() - sums[9] > 0.5 * (sums[9] - sums[0]));
}

TEST_CASE("sgdm run: sum_theta = eta * sum_m") {
  auto fed = small_federation(OptimizerKind::SgdMomentum, AttackType::GradientAscent, DefenseType::GradientKrum);
  ResilienceLedger ledger;
  ChainReport all;
  for (int t = 0; t < 10; ++t) {
    fed.run_round();
    observe_witnesses(ledger, fed.last_round());
    all.merge(check_chain(OptimizerKind::SgdMomentum, fed.last_round(), ledger, fed.optim()));
    accumulate(ledger, fed.last_round());
  }
  CHECK(all.violations.empty());
  CHECK(ledger.sum_theta == doctest::Approx(fed.optim().eta * ledger.sum_m).epsilon(1e-6));
}

TEST_CASE("v_min only counts rounds past the warmup") {
  ServerState prior{{0.0}, {0.25}, {0.0}, 0};
  RoundData early{2, &prior, {}, {}};
  ResilienceLedger ledger;
  ledger.warmup = 3;
  observe_witnesses(ledger, early);
  CHECK_FALSE(ledger.has_v_min());
  RoundData late{4, &prior, {}, {}};
  observe_witnesses(ledger, late);
  CHECK(ledger.v_min == 0.25);
  CHECK(snapshot(ledger, 4, 0).v_min == 0.25);
}

TEST_CASE("resilience report checkpoints and baseline comparison") {
  CHECK(resilience_report({}).sums == std::vector<std::array<double, 4>>(3, {0, 0, 0, 0}));

  std::vector<LedgerRow> defended, undefended;
  for (int t = 1; t <= 8; ++t) {
    defended.push_back({t, 1.0 * t, 0.1 * t, 0.01 * t, 0.5 * t, 1, 0, 0});
    undefended.push_back({t, 10.0 * t * t, 1.0 * t * t, 0.1 * t * t, 5.0 * t * t, 1, 0, 0});
  }
  const auto d = resilience_report(defended), u = resilience_report(undefended);
  CHECK(d.checkpoints == std::vector<int>{2, 4, 8});
  CHECK(d.sums.back()[0] == 8.0);
  CHECK(d.growth[2][0] == doctest::Approx(1.0));
  const auto verdict = compare_to_baseline(d, u);
  CHECK(verdict.dominated);
  CHECK(verdict.sublinear);
  CHECK(verdict.resilient_consistent());
  CHECK_FALSE(compare_to_baseline(u, d).dominated);
}
