#include "fedrec/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fedrec/error.hpp"

namespace fedrec {

namespace {

void check_inputs(const ServerState& state, std::span<const double> g) {
  const std::size_t n = state.theta_bar.size();
  if (state.m_bar.size() != n || state.v_bar.size() != n || g.size() != n) {
    throw DimensionError(fmt::format("state/gradient length mismatch ({} parameters, gradient {})", n, g.size()));
  }
  if (state.round < 0) throw NumericError("negative round index");
  if (!all_finite(g)) throw NumericError("non-finite gradient");
  if (!all_finite(state.m_bar) || !all_finite(state.v_bar) || !all_finite(state.theta_bar)) {
    throw NumericError("non-finite server state");
  }
}

void check_unit_interval(double beta, const char* name) {
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError(fmt::format("{} must lie strictly inside (0, 1)", name));
}

ClientPacket empty_packet(std::size_t n) {
  ClientPacket p;
  p.m.resize(n);
  p.v.resize(n);
  p.theta.resize(n);
  return p;
}

}  // namespace

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::SgdMomentum: return "sgdm";
    case OptimizerKind::AdaGrad: return "adagrad";
    case OptimizerKind::RmsProp: return "rmsprop";
  }
  return "unknown";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgdm" || name == "sgd_momentum") return OptimizerKind::SgdMomentum;
  if (name == "adagrad") return OptimizerKind::AdaGrad;
  if (name == "rmsprop") return OptimizerKind::RmsProp;
  throw ConfigError("unknown optimizer: " + name);
}

void OptimConfig::validate() const {
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  check_unit_interval(beta1, "beta1");
  check_unit_interval(beta2, "beta2");
  check_unit_interval(beta3, "beta3");
  check_unit_interval(beta4, "beta4");
}

double adam_step_size(const OptimConfig& cfg, int t) {
  return cfg.eta * std::sqrt(1.0 - std::pow(cfg.beta2, t)) / (1.0 - std::pow(cfg.beta1, t));
}

ClientPacket adam_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg) {
  check_inputs(state, g);
  const std::size_t n = g.size();
  const double step = adam_step_size(cfg, state.round + 1);
  ClientPacket out = empty_packet(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double m = cfg.beta1 * state.m_bar[k] + (1.0 - cfg.beta1) * g[k];
    const double v = cfg.beta2 * state.v_bar[k] + (1.0 - cfg.beta2) * g[k] * g[k];
    const double u = m / (std::sqrt(v) + cfg.epsilon);
    out.m[k] = m;
    out.v[k] = v;
    out.theta[k] = state.theta_bar[k] - step * u;
  }
  return out;
}

ClientPacket sgdm_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg) {
  check_inputs(state, g);
  const std::size_t n = g.size();
  ClientPacket out = empty_packet(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double m = cfg.beta3 * state.m_bar[k] + g[k];
    out.m[k] = m;
    out.v[k] = 0.0;
    out.theta[k] = state.theta_bar[k] - cfg.eta * m;
  }
  return out;
}

ClientPacket adagrad_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg) {
  check_inputs(state, g);
  const std::size_t n = g.size();
  ClientPacket out = empty_packet(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = state.v_bar[k] + g[k] * g[k];
    const double u = g[k] / (std::sqrt(r) + cfg.epsilon);
    out.m[k] = 0.0;
    out.v[k] = r;
    out.theta[k] = state.theta_bar[k] - cfg.eta * u;
  }
  return out;
}

ClientPacket rmsprop_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg) {
  check_inputs(state, g);
  const std::size_t n = g.size();
  ClientPacket out = empty_packet(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = cfg.beta4 * state.v_bar[k] + (1.0 - cfg.beta4) * g[k] * g[k];
    const double u = g[k] / (std::sqrt(r) + cfg.epsilon);
    out.m[k] = 0.0;
    out.v[k] = r;
    out.theta[k] = state.theta_bar[k] - cfg.eta * u;
  }
  return out;
}

ClientPacket optimizer_update(OptimizerKind kind, const ServerState& state, std::span<const double> g,
                              const OptimConfig& cfg) {
  switch (kind) {
    case OptimizerKind::Adam: return adam_update(state, g, cfg);
    case OptimizerKind::SgdMomentum: return sgdm_update(state, g, cfg);
    case OptimizerKind::AdaGrad: return adagrad_update(state, g, cfg);
    case OptimizerKind::RmsProp: return rmsprop_update(state, g, cfg);
  }
  throw ConfigError("unknown optimizer kind");
}

}  // namespace fedrec
