#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "fedrec/fed.hpp"

namespace fedrec {

/// Running sums over rounds, selected clients and benign clients, plus the witnessed constants
/// the proof-chain bounds rely on.
struct ResilienceLedger {
  double sum_g = 0.0;
  double sum_m = 0.0;
  double sum_v = 0.0;  // second moment, or the squared-gradient accumulator
  double sum_theta = 0.0;
  double g_max = 0.0;
  double v_min = std::numeric_limits<double>::infinity();  // only rounds > warmup contribute
  int warmup = 3;
  int rounds = 0;

  bool has_v_min() const noexcept { return v_min < std::numeric_limits<double>::infinity(); }
};

struct PairDistance {
  int selected_id = 0;
  int benign_id = 0;
  double g = 0.0;
  double m = 0.0;
  double v = 0.0;
  double theta = 0.0;
};

/// Distances for every (selected, benign) pair of the round.
std::vector<PairDistance> pair_distances(const RoundData& data);

/// Folds this round's gradient norms into g_max and, past the warmup, the prior state's smallest
/// second-moment component into v_min.
void observe_witnesses(ResilienceLedger& ledger, const RoundData& data);

/// Adds this round's pair sums to the ledger.
void accumulate(ResilienceLedger& ledger, const RoundData& data);

struct ChainCheck {
  std::string name;
  int round = 0;
  int selected_id = 0;
  int benign_id = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = true;
};

struct ChainReport {
  long long checked = 0;
  long long skipped = 0;  // bounds skipped because no positive lower-bound witness exists yet
  std::vector<ChainCheck> violations;

  void merge(const ChainReport& other);
};

inline constexpr double kChainTol = 1e-9;

/// a == b up to kChainTol * max(1, |a|, |b|).
bool chain_equal(double a, double b);
/// a <= b up to kChainTol * max(1, |a|, |b|).
bool chain_leq(double a, double b);

ChainReport check_adam_chain(const RoundData& data, const ResilienceLedger& ledger, const OptimConfig& cfg);
ChainReport check_sgdm_chain(const RoundData& data, const ResilienceLedger& ledger, const OptimConfig& cfg);
ChainReport check_adagrad_chain(const RoundData& data, const ResilienceLedger& ledger, const OptimConfig& cfg);
ChainReport check_rmsprop_chain(const RoundData& data, const ResilienceLedger& ledger, const OptimConfig& cfg);
ChainReport check_chain(OptimizerKind kind, const RoundData& data, const ResilienceLedger& ledger,
                        const OptimConfig& cfg);

/// One resilience.csv row.
struct LedgerRow {
  int round = 0;
  double sum_g = 0.0;
  double sum_m = 0.0;
  double sum_v = 0.0;
  double sum_theta = 0.0;
  double g_max = 0.0;
  double v_min = 0.0;  // 0 until a witness exists
  long long violations = 0;
};

LedgerRow snapshot(const ResilienceLedger& ledger, int round, long long violations);

struct ResilienceReport {
  static constexpr std::size_t kSums = 4;  // g, m, v, theta
  std::vector<int> checkpoints;            // T/4, T/2, T
  std::vector<std::array<double, kSums>> sums;
  std::vector<std::array<double, kSums>> growth;  // per-round increase over each checkpoint segment
};

/// Sums at the checkpoints {T/4, T/2, T} of a run with `rows` (one per round, in order).
ResilienceReport resilience_report(const std::vector<LedgerRow>& rows);

struct ResilienceVerdict {
  bool dominated = true;        // defended sums <= undefended sums at every checkpoint
  bool sublinear = true;        // the defended/undefended ratio never grows across checkpoints
  std::vector<std::array<double, ResilienceReport::kSums>> ratios;
  bool resilient_consistent() const noexcept { return dominated && sublinear; }
};

ResilienceVerdict compare_to_baseline(const ResilienceReport& defended, const ResilienceReport& undefended);

}  // namespace fedrec
