#pragma once

#include <cstdint>
#include <vector>

#include "fedrec/attack.hpp"
#include "fedrec/defense.hpp"
#include "fedrec/fism.hpp"
#include "fedrec/fmf.hpp"
#include "fedrec/kernels.hpp"
#include "fedrec/optim.hpp"

namespace fedrec {

struct FederationConfig {
  int total_clients = 0;
  double byzantine_fraction = 0.0;
  double client_ratio = 0.5;
  int rounds = 50;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AttackKind attack;
  DefenseKind defense;
  std::uint64_t seed = 0;
  int probe_count = 5;  // benign clients evaluated every round for the resilience ledger
  int warmup = 3;       // T' of the lower-bound assumptions
  ModelKind model = ModelKind::Fism;
  Execution execution = Execution::Parallel;

  int byzantine_count() const;
  int sample_count() const;
  bool is_byzantine(int client_id) const { return client_id < byzantine_count(); }
  /// Krum's f for a round with `sampled` clients.
  int krum_f(int sampled) const;
  void validate() const;
};

/// m and v start at zero, theta is iid standard Gaussian.
ServerState init_state(Shape shape, std::uint64_t seed);

/// Uniform sample without replacement, ascending ids.
std::vector<int> sample_clients(int round, const FederationConfig& cfg);

struct RecoveredGradient {
  FlatVec g;
  bool valid = true;  // false when a recovered square went negative beyond tolerance
};

/// Inverts the optimizer's moment rule. For AdaGrad and RMSProp the accumulator only reveals g^2:
/// the packet is invalid if that square is negative, and the signed value is read off the
/// parameter step, which is better conditioned than a square root when g is small next to r.
RecoveredGradient recover_gradient(const ClientPacket& packet, const ServerState& state, const OptimConfig& cfg,
                                   OptimizerKind kind);

/// Relative closeness |a - b| <= tol * max(1, |a|, |b|).
bool close_to(double a, double b, double tol);

inline constexpr double kVerifyTol = 1e-8;

/// True iff the packet satisfies the optimizer's moment and parameter rules for the recovered
/// gradient, componentwise within kVerifyTol.
bool verify_rules(const ClientPacket& packet, const ServerState& state, std::span<const double> g_recovered,
                  const OptimConfig& cfg, OptimizerKind kind);

/// One participant's contribution in a round, as seen by the server and by the harness.
struct ClientRound {
  int client_id = 0;
  bool byzantine = false;
  bool sampled = false;   // false for probe clients that only feed the resilience ledger
  bool verified = true;
  FlatVec true_gradient;  // what the client's data produced
  FlatVec recovered;      // what the server recovers from the packet
  FlatVec user_gradient;  // FMF only: gradient of the private user vector
  ClientPacket packet;
};

struct RoundLog {
  int round = 0;
  std::vector<int> sampled;
  std::vector<int> selected;
  int byzantine_sampled = 0;
  int byzantine_selected = 0;
  int violations = 0;               // sampled packets failing verify_rules
  double benign_grad_distance = 0;  // mean distance of benign recovered gradients to the benign centroid
  double byzantine_grad_distance = 0;
  double theta_separation = 0;      // Byzantine/benign centroid distance over dispersion, parameter space
  double grad_separation = 0;       // same statistic on recovered gradients
  double separation_ratio = 0;      // theta_separation / grad_separation (0 when undefined)
};

struct RoundData {
  int round = 0;
  const ServerState* prior = nullptr;           // state the clients started from
  std::vector<const ClientRound*> selected;     // F_t
  std::vector<const ClientRound*> benign;       // benign sampled clients plus probes
};

class Federation {
 public:
  Federation(FederationConfig cfg, OptimConfig optim, LossConfig loss, Shape shape,
             std::vector<ClientDataset> clients);

  const FederationConfig& config() const noexcept { return cfg_; }
  const OptimConfig& optim() const noexcept { return optim_; }
  const LossConfig& loss() const noexcept { return loss_; }
  const ServerState& state() const noexcept { return state_; }
  const std::vector<ClientDataset>& clients() const noexcept { return clients_; }
  const std::vector<FlatVec>& user_vectors() const noexcept { return users_; }
  const std::vector<int>& probes() const noexcept { return probes_; }

  /// Runs the next round. The returned RoundData points into storage owned by the federation
  /// and stays valid until the following call.
  RoundLog run_round();
  const RoundData& last_round() const noexcept { return last_; }
  /// Every client computed in the last round: the sampled ones first, then extra probes.
  const std::vector<ClientRound>& last_work() const noexcept { return work_; }

  /// Scores of every item for a client under the current global parameters.
  std::vector<double> scores_for(int client_id) const;

 private:
  ClientRound client_work(int client_id, bool sampled) const;
  FilterResult filter(const std::vector<const ClientRound*>& candidates) const;

  FederationConfig cfg_;
  OptimConfig optim_;
  LossConfig loss_;
  Shape shape_;
  std::vector<ClientDataset> clients_;
  ServerState state_;
  ServerState prior_;
  std::vector<FlatVec> users_;  // FMF private user vectors
  std::vector<int> probes_;
  std::vector<ClientRound> work_;
  RoundData last_;
};

}  // namespace fedrec
