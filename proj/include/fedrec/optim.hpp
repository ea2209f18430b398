#pragma once

#include <span>
#include <string>

#include "fedrec/params.hpp"

namespace fedrec {

enum class OptimizerKind { Adam, SgdMomentum, AdaGrad, RmsProp };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct OptimConfig {
  double eta = 1e-3;
  double beta1 = 0.9;    // Adam first moment
  double beta2 = 0.999;  // Adam second moment
  double beta3 = 0.9;    // SGD momentum
  double beta4 = 0.9;    // RMSProp decay
  double epsilon = 1e-8;

  void validate() const;
};

/// Aggregated server state after `round` aggregations. For AdaGrad and RMSProp `v_bar` holds
/// the squared-gradient accumulator; for SGD with momentum it stays zero.
struct ServerState {
  FlatVec m_bar;
  FlatVec v_bar;
  FlatVec theta_bar;
  int round = 0;

  std::size_t size() const noexcept { return theta_bar.size(); }
};

/// One client's upload for a round. `v` carries the second moment (Adam), the squared-gradient
/// accumulator (AdaGrad, RMSProp) or zeros (SGD with momentum).
struct ClientPacket {
  FlatVec m;
  FlatVec v;
  FlatVec theta;
  int train_count = 1;
  int client_id = 0;

  bool operator==(const ClientPacket&) const = default;
};

/// Bias-corrected step size eta * sqrt(1 - beta2^t) / (1 - beta1^t).
double adam_step_size(const OptimConfig& cfg, int t);

ClientPacket adam_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg);
ClientPacket sgdm_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg);
ClientPacket adagrad_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg);
ClientPacket rmsprop_update(const ServerState& state, std::span<const double> g, const OptimConfig& cfg);

ClientPacket optimizer_update(OptimizerKind kind, const ServerState& state, std::span<const double> g,
                              const OptimConfig& cfg);

}  // namespace fedrec
