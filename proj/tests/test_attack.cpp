#include <doctest.h>

#include <cmath>
#include <random>

#include "fedrec/attack.hpp"
#include "fedrec/error.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fedrec;

TEST_CASE("gradient ascent is the update at -g") {
  std::mt19937_64 rng(1);
  const OptimConfig cfg;
  for (auto kind : {OptimizerKind::Adam, OptimizerKind::SgdMomentum, OptimizerKind::AdaGrad, OptimizerKind::RmsProp}) {
    const auto state = testing::random_state(rng, 12, 3);
    const auto g = testing::gaussian(rng, 12);
    CHECK(gradient_ascent(state, g, cfg, kind) == optimizer_update(kind, state, scaled(g, -1.0), cfg));
    const FlatVec zero(12, 0.0);
    CHECK(gradient_ascent(state, zero, cfg, kind) == optimizer_update(kind, state, zero, cfg));
  }
}

TEST_CASE("camouflage: first round is fully degenerate") {
  ServerState state{FlatVec(6, 0.0), FlatVec(6, 0.0), FlatVec(6, 1.0), 0};
  std::mt19937_64 rng(2);
  const auto g = testing::gaussian(rng, 6);
  const auto res = camouflage_gradient(state, g, OptimConfig{});
  CHECK(res.g_tilde == g);
  CHECK(res.camouflaged_count() == 0);
  CHECK(camouflage_packet(state, g, OptimConfig{}) == adam_update(state, g, OptimConfig{}));
}

TEST_CASE("camouflage identity on 1000 non-degenerate triples") {
  std::mt19937_64 rng(3);
  const double b1 = 0.9, b2 = 0.999;
  int accepted = 0, masked = 0;
  while (accepted < 1000) {
    const auto state = testing::adam_history_state(rng, 1, b1, b2);
    const double m = state.m_bar[0], v = state.v_bar[0];
    const double g = m / (1 - std::pow(b1, state.round)) + testing::gaussian(rng, 1)[0];
    const auto oracle = oracle::vieta_root(m, v, g, b1, b2);
    const auto got = camouflage_component(m, v, g, b1, b2);
    if (std::abs(oracle.leading) < 1e-6 || std::abs(g) <= 1e-12) continue;
    if (!oracle.same_sign) {
      // The other root realizes the sign-flipped update and must be rejected.
      CHECK_FALSE(got.camouflaged);
      CHECK(got.g_tilde == g);
      ++masked;
      continue;
    }
    REQUIRE(got.camouflaged);
    CHECK(testing::rel_err(got.g_tilde, oracle.root) <= 1e-8);
    CHECK(std::abs(adam_direction(m, v, got.g_tilde, b1, b2) - adam_direction(m, v, g, b1, b2)) <= 1e-9);
    CHECK(got.g_tilde != g);
    ++accepted;
  }
  CHECK(masked > 0);
}

TEST_CASE("camouflage: zero denominator and point C are masked") {
  const double b1 = 0.9, b2 = 0.999;
  // m = 0 and v = 0 is the first-round case.
  CHECK_FALSE(camouflage_component(0, 0, 1.0, b1, b2).camouflaged);
  // m = 0, v > 0: the other root is -g, which flips the update.
  const auto flip = camouflage_component(0, 0.5, 1.0, b1, b2);
  CHECK_FALSE(flip.camouflaged);
  CHECK(flip.g_tilde == 1.0);
  // Double root: the benign gradient at which both roots coincide yields no alternative.
  const double m = 0.3, v = 0.2;
  const double a = 1 - b1, b = 1 - b2;
  // For fixed (m, v) the map x -> u(x) peaks where the derivative vanishes: x* = b2 v a / (b1 m b).
  const double peak = b2 * v * a / (b1 * m * b);
  const auto at_peak = camouflage_component(m, v, peak, b1, b2);
  if (at_peak.camouflaged) CHECK(std::abs(at_peak.g_tilde - peak) <= 1e-6 * std::abs(peak));
}

TEST_CASE("camouflage packet keeps theta but changes the moments") {
  std::mt19937_64 rng(4);
  const OptimConfig cfg;
  const auto state = testing::adam_history_state(rng, 40);
  const auto g = testing::gaussian(rng, 40);
  const auto crafted = camouflage_gradient(state, g, cfg);
  REQUIRE(crafted.camouflaged_count() > 0);
  const auto benign = adam_update(state, g, cfg);
  const auto packet = camouflage_packet(state, g, cfg);
  for (std::size_t k = 0; k < 40; ++k) {
    if (!crafted.camouflaged[k]) {
      CHECK(packet.m[k] == benign.m[k]);
      continue;
    }
    CHECK(std::abs(packet.theta[k] - benign.theta[k]) <= 1e-9 * std::max(1.0, std::abs(benign.theta[k])));
    CHECK(packet.m[k] != benign.m[k]);
  }
}

TEST_CASE("additive noise") {
  ClientPacket p{{1, 2}, {3, 4}, {5, 6}, 1, 0};
  const auto tiny = additive_noise(p, 1e-30, 7);
  for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(tiny.theta[k] - p.theta[k]) <= 1e-12);
  CHECK(additive_noise(p, 0.5, 7) == additive_noise(p, 0.5, 7));
  CHECK(additive_noise(p, 0.5, 7).m == p.m);
  CHECK_THROWS_AS(additive_noise(p, 0.0, 7), ConfigError);
}

TEST_CASE("attack validation") {
  AttackKind camo{AttackType::Camouflage, 0.0};
  CHECK_NOTHROW(camo.validate(OptimizerKind::Adam));
  CHECK_THROWS_AS(camo.validate(OptimizerKind::AdaGrad), ConfigError);
  AttackKind noise{AttackType::AdditiveNoise, 0.0};
  CHECK_THROWS_AS(noise.validate(OptimizerKind::Adam), ConfigError);
  CHECK(parse_attack(to_string(AttackType::GradientAscent)) == AttackType::GradientAscent);
}
