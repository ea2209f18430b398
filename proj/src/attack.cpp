#include "fedrec/attack.hpp"

#include <algorithm>
#include <cmath>

#include "fedrec/error.hpp"
#include "fedrec/rng.hpp"

namespace fedrec {

void AttackKind::validate(OptimizerKind optimizer) const {
  if (type == AttackType::AdditiveNoise && !(sigma > 0.0)) {
    throw ConfigError("additive noise attack needs sigma > 0");
  }
  if (type == AttackType::Camouflage && optimizer != OptimizerKind::Adam) {
    throw ConfigError("the camouflage attack is only defined for Adam");
  }
}

std::string to_string(AttackType type) {
  switch (type) {
    case AttackType::None: return "none";
    case AttackType::GradientAscent: return "gradient_ascent";
    case AttackType::Camouflage: return "camouflage";
    case AttackType::AdditiveNoise: return "additive_noise";
  }
  return "unknown";
}

AttackType parse_attack(const std::string& name) {
  if (name == "none") return AttackType::None;
  if (name == "gradient_ascent") return AttackType::GradientAscent;
  if (name == "camouflage") return AttackType::Camouflage;
  if (name == "additive_noise" || name == "noise") return AttackType::AdditiveNoise;
  throw ConfigError("unknown attack: " + name);
}

ClientPacket gradient_ascent(const ServerState& state, std::span<const double> g, const OptimConfig& cfg,
                             OptimizerKind kind) {
  FlatVec flipped(g.begin(), g.end());
  for (double& x : flipped) x = -x;
  return optimizer_update(kind, state, flipped, cfg);
}

double adam_direction(double m_bar, double v_bar, double x, double beta1, double beta2) {
  return (beta1 * m_bar + (1.0 - beta1) * x) / std::sqrt(beta2 * v_bar + (1.0 - beta2) * x * x);
}

CamouflageComponent camouflage_component(double m_bar, double v_bar, double g, double beta1, double beta2,
                                         double tol) {
  const CamouflageComponent benign{g, false};
  const double a = 1.0 - beta1;
  const double b = 1.0 - beta2;

  const double den_m2 = beta1 * beta1 * b * m_bar * m_bar;
  const double den_mg = 2.0 * beta1 * a * b * m_bar * g;
  const double den_v = beta2 * a * a * v_bar;
  const double den = den_m2 + den_mg - den_v;
  const double den_scale = den_m2 + std::abs(den_mg) + den_v;
  if (!(den_scale > 0.0) || std::abs(den) < tol * den_scale) return benign;

  const double num = 2.0 * beta1 * beta2 * a * m_bar * v_bar + beta2 * a * a * v_bar * g -
                     beta1 * beta1 * b * m_bar * m_bar * g;
  const double g_tilde = num / den;
  if (!std::isfinite(g_tilde) || g_tilde == g) return benign;

  const double benign_denom = beta2 * v_bar + b * g * g;
  if (!(benign_denom > 0.0)) return benign;
  const double u_benign = adam_direction(m_bar, v_bar, g, beta1, beta2);
  const double u_tilde = adam_direction(m_bar, v_bar, g_tilde, beta1, beta2);
  if (!std::isfinite(u_tilde)) return benign;
  // The root can realize -u (the unique-mapping case); only keep roots with the same update.
  if (std::abs(u_tilde - u_benign) > tol * std::max(1.0, std::abs(u_benign))) return benign;
  return {g_tilde, true};
}

std::size_t CamouflageResult::camouflaged_count() const {
  return static_cast<std::size_t>(std::count(camouflaged.begin(), camouflaged.end(), true));
}

CamouflageResult camouflage_gradient(const ServerState& state, std::span<const double> g, const OptimConfig& cfg) {
  const std::size_t n = g.size();
  if (state.m_bar.size() != n || state.v_bar.size() != n) throw DimensionError("state/gradient length mismatch");
  CamouflageResult out{FlatVec(n), std::vector<bool>(n, false)};
  for (std::size_t k = 0; k < n; ++k) {
    const auto c = camouflage_component(state.m_bar[k], state.v_bar[k], g[k], cfg.beta1, cfg.beta2);
    out.g_tilde[k] = c.g_tilde;
    out.camouflaged[k] = c.camouflaged;
  }
  return out;
}

ClientPacket camouflage_packet(const ServerState& state, std::span<const double> g, const OptimConfig& cfg) {
  const auto crafted = camouflage_gradient(state, g, cfg);
  return adam_update(state, crafted.g_tilde, cfg);
}

ClientPacket additive_noise(ClientPacket packet, double sigma, std::uint64_t seed) {
  if (!(sigma > 0.0)) throw ConfigError("additive noise needs sigma > 0");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& x : packet.theta) x += noise(rng);
  return packet;
}

}  // namespace fedrec
