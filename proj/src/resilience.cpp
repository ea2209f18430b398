#include "fedrec/resilience.hpp"

#include <algorithm>
#include <cmath>

namespace fedrec {

namespace {

FlatVec sqrt_of(std::span<const double> a) {
  FlatVec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = std::sqrt(std::max(a[k], 0.0));
  return out;
}

FlatVec rsqrt_of(std::span<const double> a) {
  FlatVec out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = 1.0 / std::sqrt(a[k]);
  return out;
}

class Recorder {
 public:
  Recorder(ChainReport& report, int round, int selected, int benign)
      : report_(report), round_(round), selected_(selected), benign_(benign) {}

  void equal(const char* name, double lhs, double rhs) { record(name, lhs, rhs, chain_equal(lhs, rhs)); }
  void leq(const char* name, double lhs, double rhs) { record(name, lhs, rhs, chain_leq(lhs, rhs)); }

 private:
  void record(const char* name, double lhs, double rhs, bool ok) {
    ++report_.checked;
    if (!ok) report_.violations.push_back({name, round_, selected_, benign_, lhs, rhs, false});
  }

  ChainReport& report_;
  int round_;
  int selected_;
  int benign_;
};

// Second-moment style bounds shared by AdaGrad and RMSProp. `scale` is 1 for AdaGrad and
// 1 - beta4 for RMSProp, `carry` is 1 and beta4 respectively.
ChainReport accumulator_chain(const RoundData& data, const ResilienceLedger& ledger, double scale, double carry,
                              const char* tag) {
  ChainReport report;
  const std::string r_bound = std::string(tag) + ".r_bound";
  const std::string sqrt_bound = std::string(tag) + ".sqrt_r_bound";
  const std::string rsqrt_bound = std::string(tag) + ".rsqrt_r_bound";
  const bool lower_bounds = data.round > ledger.warmup && ledger.has_v_min() && ledger.v_min > 0.0;
  for (const auto* i : data.selected) {
    for (const auto* j : data.benign) {
      Recorder rec(report, data.round, i->client_id, j->client_id);
      const double d = euclidean_distance(i->recovered, j->recovered);
      const double dr = euclidean_distance(i->packet.v, j->packet.v);
      rec.leq(r_bound.c_str(), dr, scale * (d * d + 2.0 * d * ledger.g_max));
      if (!lower_bounds) {
        report.skipped += 2;
        continue;
      }
      const double floor = carry * ledger.v_min;
      const double dsqrt = euclidean_distance(sqrt_of(i->packet.v), sqrt_of(j->packet.v));
      rec.leq(sqrt_bound.c_str(), dsqrt, dr / (2.0 * std::sqrt(floor)));
      const double drsqrt = euclidean_distance(rsqrt_of(i->packet.v), rsqrt_of(j->packet.v));
      rec.leq(rsqrt_bound.c_str(), drsqrt, dsqrt / floor);
    }
  }
  return report;
}

}  // namespace

std::vector<PairDistance> pair_distances(const RoundData& data) {
  std::vector<PairDistance> out;
  out.reserve(data.selected.size() * data.benign.size());
  for (const auto* i : data.selected) {
    for (const auto* j : data.benign) {
      out.push_back({i->client_id, j->client_id, euclidean_distance(i->recovered, j->recovered),
                     euclidean_distance(i->packet.m, j->packet.m), euclidean_distance(i->packet.v, j->packet.v),
                     euclidean_distance(i->packet.theta, j->packet.theta)});
    }
  }
  return out;
}

void observe_witnesses(ResilienceLedger& ledger, const RoundData& data) {
  for (const auto* c : data.selected) ledger.g_max = std::max(ledger.g_max, norm(c->recovered));
  for (const auto* c : data.benign) ledger.g_max = std::max(ledger.g_max, norm(c->recovered));
  if (data.round > ledger.warmup && data.prior != nullptr && data.prior->size() > 0) {
    ledger.v_min = std::min(ledger.v_min, min_component(data.prior->v_bar));
  }
}

void accumulate(ResilienceLedger& ledger, const RoundData& data) {
  for (const auto& p : pair_distances(data)) {
    ledger.sum_g += p.g;
    ledger.sum_m += p.m;
    ledger.sum_v += p.v;
    ledger.sum_theta += p.theta;
  }
  ledger.rounds = std::max(ledger.rounds, data.round);
}

void ChainReport::merge(const ChainReport& other) {
  checked += other.checked;
  skipped += other.skipped;
  violations.insert(violations.end(), other.violations.begin(), other.violations.end());
}

bool chain_equal(double a, double b) {
  return std::abs(a - b) <= kChainTol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool chain_leq(double a, double b) {
  return a <= b + kChainTol * std::max({1.0, std::abs(a), std::abs(b)});
}

ChainReport check_adam_chain(const RoundData& data, const ResilienceLedger& ledger, const OptimConfig& cfg) {
  ChainReport report;
  const bool lower_bounds = data.round > ledger.warmup && ledger.has_v_min() && ledger.v_min > 0.0;
  const double floor = cfg.beta2 * ledger.v_min;
  for (const auto* i : data.selected) {
    for (const auto* j : data.benign) {
      Recorder rec(report, data.round, i->client_id, j->client_id);
      const double d = euclidean_distance(i->recovered, j->recovered);
      const double dm = euclidean_distance(i->packet.m, j->packet.m);
      const double dv = euclidean_distance(i->packet.v, j->packet.v);
      rec.equal("adam.m_identity", dm, (1.0 - cfg.beta1) * d);
      rec.leq("adam.v_bound", dv, (1.0 - cfg.beta2) * (d * d + 2.0 * d * ledger.g_max));
      rec.leq("adam.m_norm", norm(i->packet.m), ledger.g_max);
      if (!lower_bounds) {
        report.skipped += 2;
        continue;
      }
      const double dsqrt = euclidean_distance(sqrt_of(i->packet.v), sqrt_of(j->packet.v));
      rec.leq("adam.sqrt_v_bound", dsqrt, dv / (2.0 * std::sqrt(floor)));
      const double drsqrt = euclidean_distance(rsqrt_of(i->packet.v), rsqrt_of(j->packet.v));
      rec.leq("adam.rsqrt_v_bound", drsqrt, dsqrt / floor);
    }
  }
  return report;
}

ChainReport check_sgdm_chain(const RoundData& data, const ResilienceLedger&, const OptimConfig& cfg) {
  ChainReport report;
  for (const auto* i : data.selected) {
    for (const auto* j : data.benign) {
      Recorder rec(report, data.round, i->client_id, j->client_id);
      const double d = euclidean_distance(i->recovered, j->recovered);
      const double dm = euclidean_distance(i->packet.m, j->packet.m);
      rec.equal("sgdm.m_identity", dm, d);
      if (!i->verified || !j->verified) {
        ++report.skipped;
        continue;
      }
      rec.equal("sgdm.theta_identity", euclidean_distance(i->packet.theta, j->packet.theta), cfg.eta * dm);
    }
  }
  return report;
}

ChainReport check_adagrad_chain(const RoundData& data, const ResilienceLedger& ledger, const OptimConfig&) {
  return accumulator_chain(data, ledger, 1.0, 1.0, "adagrad");
}

ChainReport check_rmsprop_chain(const RoundData& data, const ResilienceLedger& ledger, const OptimConfig& cfg) {
  return accumulator_chain(data, ledger, 1.0 - cfg.beta4, cfg.beta4, "rmsprop");
}

ChainReport check_chain(OptimizerKind kind, const RoundData& data, const ResilienceLedger& ledger,
                        const OptimConfig& cfg) {
  switch (kind) {
    case OptimizerKind::Adam: return check_adam_chain(data, ledger, cfg);
    case OptimizerKind::SgdMomentum: return check_sgdm_chain(data, ledger, cfg);
    case OptimizerKind::AdaGrad: return check_adagrad_chain(data, ledger, cfg);
    case OptimizerKind::RmsProp: return check_rmsprop_chain(data, ledger, cfg);
  }
  return {};
}

LedgerRow snapshot(const ResilienceLedger& ledger, int round, long long violations) {
  return {round,         ledger.sum_g, ledger.sum_m, ledger.sum_v, ledger.sum_theta, ledger.g_max,
          ledger.has_v_min() ? ledger.v_min : 0.0, violations};
}

ResilienceReport resilience_report(const std::vector<LedgerRow>& rows) {
  ResilienceReport out;
  const int total = static_cast<int>(rows.size());
  auto sums_at = [&](int t) -> std::array<double, ResilienceReport::kSums> {
    if (t <= 0) return {0.0, 0.0, 0.0, 0.0};
    const auto& r = rows[static_cast<std::size_t>(t - 1)];
    return {r.sum_g, r.sum_m, r.sum_v, r.sum_theta};
  };
  out.checkpoints = {total / 4, total / 2, total};
  int previous = 0;
  std::array<double, ResilienceReport::kSums> before{};
  for (int t : out.checkpoints) {
    const auto now = sums_at(t);
    std::array<double, ResilienceReport::kSums> rate{};
    for (std::size_t k = 0; k < rate.size(); ++k) {
      rate[k] = t > previous ? (now[k] - before[k]) / (t - previous) : 0.0;
    }
    out.sums.push_back(now);
    out.growth.push_back(rate);
    previous = t;
    before = now;
  }
  return out;
}

ResilienceVerdict compare_to_baseline(const ResilienceReport& defended, const ResilienceReport& undefended) {
  ResilienceVerdict out;
  const std::size_t n = std::min(defended.sums.size(), undefended.sums.size());
  for (std::size_t c = 0; c < n; ++c) {
    std::array<double, ResilienceReport::kSums> ratio{};
    for (std::size_t k = 0; k < ratio.size(); ++k) {
      const double num = defended.sums[c][k];
      const double den = undefended.sums[c][k];
      ratio[k] = den > 0.0 ? num / den : (num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      if (!chain_leq(num, den)) out.dominated = false;
      if (c > 0 && ratio[k] > out.ratios.back()[k] * (1.0 + 1e-9) + 1e-12) out.sublinear = false;
    }
    out.ratios.push_back(ratio);
  }
  return out;
}

}  // namespace fedrec
