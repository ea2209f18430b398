#include "fedrec/fed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fedrec/error.hpp"
#include "fedrec/rng.hpp"

namespace fedrec {

namespace {

// Negative recovered squares below this (relative to the accumulator) are rounding noise.
constexpr double kSquareTol = 1e-10;

struct Separation {
  double normalized = 0.0;
  double benign_spread = 0.0;
  double byzantine_spread = 0.0;
};

// Centroid distance between the two groups, divided by the benign group's mean distance to its
// own centroid so that parameter and gradient spaces are comparable.
Separation separation(const std::vector<std::span<const double>>& benign,
                      const std::vector<std::span<const double>>& byzantine) {
  Separation out;
  if (benign.empty()) return out;
  const FlatVec c = centroid(benign);
  for (const auto& x : benign) out.benign_spread += euclidean_distance(x, c);
  out.benign_spread /= static_cast<double>(benign.size());
  if (byzantine.empty()) return out;
  for (const auto& x : byzantine) out.byzantine_spread += euclidean_distance(x, c);
  out.byzantine_spread /= static_cast<double>(byzantine.size());
  const double gap = euclidean_distance(centroid(byzantine), c);
  out.normalized = out.benign_spread > 0.0 ? gap / out.benign_spread : gap;
  return out;
}

}  // namespace

int FederationConfig::byzantine_count() const {
  return static_cast<int>(std::lround(byzantine_fraction * total_clients));
}

int FederationConfig::sample_count() const {
  return std::max(1, static_cast<int>(std::lround(client_ratio * total_clients)));
}

int FederationConfig::krum_f(int sampled) const {
  if (defense.f >= 0) return defense.f;
  return static_cast<int>(std::ceil(byzantine_fraction * sampled - 1e-12));
}

void FederationConfig::validate() const {
  if (total_clients < 1) throw ConfigError("federation needs at least one client");
  if (!(byzantine_fraction >= 0.0 && byzantine_fraction < 1.0)) {
    throw ConfigError("byzantine_fraction must lie in [0, 1)");
  }
  if (!(client_ratio > 0.0 && client_ratio <= 1.0)) throw ConfigError("client_ratio must lie in (0, 1]");
  if (rounds < 1) throw ConfigError("rounds must be positive");
  if (probe_count < 0) throw ConfigError("probe_count must be non-negative");
  if (warmup < 0) throw ConfigError("warmup must be non-negative");
  if (byzantine_count() >= total_clients) throw ConfigError("no benign clients left");
  attack.validate(optimizer);
  defense.validate();
}

ServerState init_state(Shape shape, std::uint64_t seed) {
  ServerState s;
  s.m_bar.assign(shape.size(), 0.0);
  s.v_bar.assign(shape.size(), 0.0);
  s.theta_bar.resize(shape.size());
  auto rng = make_rng(seed, Stream::Init);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& x : s.theta_bar) x = gauss(rng);
  return s;
}

std::vector<int> sample_clients(int round, const FederationConfig& cfg) {
  const int n = cfg.total_clients;
  const int k = std::min(n, cfg.sample_count());
  std::vector<int> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  auto rng = make_rng(cfg.seed, Stream::Sampling, {static_cast<std::uint64_t>(round)});
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

RecoveredGradient recover_gradient(const ClientPacket& packet, const ServerState& state, const OptimConfig& cfg,
                                   OptimizerKind kind) {
  const std::size_t n = state.size();
  if (packet.m.size() != n || packet.v.size() != n || packet.theta.size() != n) {
    throw DimensionError("packet does not match the server state");
  }
  RecoveredGradient out{FlatVec(n), true};
  switch (kind) {
    case OptimizerKind::Adam:
      for (std::size_t k = 0; k < n; ++k) out.g[k] = (packet.m[k] - cfg.beta1 * state.m_bar[k]) / (1.0 - cfg.beta1);
      break;
    case OptimizerKind::SgdMomentum:
      for (std::size_t k = 0; k < n; ++k) out.g[k] = packet.m[k] - cfg.beta3 * state.m_bar[k];
      break;
    case OptimizerKind::AdaGrad:
    case OptimizerKind::RmsProp: {
      const bool ada = kind == OptimizerKind::AdaGrad;
      for (std::size_t k = 0; k < n; ++k) {
        const double r = packet.v[k];
        const double carried = ada ? state.v_bar[k] : cfg.beta4 * state.v_bar[k];
        const double square = ada ? r - carried : (r - carried) / (1.0 - cfg.beta4);
        if (square < -kSquareTol * std::max(1.0, std::abs(r)) || r < 0.0) out.valid = false;
        const double step = (state.theta_bar[k] - packet.theta[k]) / cfg.eta;
        out.g[k] = step * (std::sqrt(std::max(r, 0.0)) + cfg.epsilon);
      }
      break;
    }
  }
  if (!all_finite(out.g)) out.valid = false;
  return out;
}

bool close_to(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool verify_rules(const ClientPacket& packet, const ServerState& state, std::span<const double> g,
                  const OptimConfig& cfg, OptimizerKind kind) {
  const std::size_t n = state.size();
  if (packet.m.size() != n || packet.v.size() != n || packet.theta.size() != n || g.size() != n) return false;
  const double tol = kVerifyTol;
  switch (kind) {
    case OptimizerKind::Adam: {
      const double step = adam_step_size(cfg, state.round + 1);
      for (std::size_t k = 0; k < n; ++k) {
        const double v = cfg.beta2 * state.v_bar[k] + (1.0 - cfg.beta2) * g[k] * g[k];
        if (!close_to(packet.v[k], v, tol)) return false;
        if (packet.v[k] < 0.0) return false;
        const double theta = state.theta_bar[k] - step * packet.m[k] / (std::sqrt(packet.v[k]) + cfg.epsilon);
        if (!close_to(packet.theta[k], theta, tol)) return false;
      }
      return true;
    }
    case OptimizerKind::SgdMomentum:
      for (std::size_t k = 0; k < n; ++k) {
        if (!close_to(packet.v[k], 0.0, tol)) return false;
        if (!close_to(packet.m[k], cfg.beta3 * state.m_bar[k] + g[k], tol)) return false;
        if (!close_to(packet.theta[k], state.theta_bar[k] - cfg.eta * packet.m[k], tol)) return false;
      }
      return true;
    case OptimizerKind::AdaGrad:
    case OptimizerKind::RmsProp: {
      const bool ada = kind == OptimizerKind::AdaGrad;
      for (std::size_t k = 0; k < n; ++k) {
        const double r = ada ? state.v_bar[k] + g[k] * g[k]
                             : cfg.beta4 * state.v_bar[k] + (1.0 - cfg.beta4) * g[k] * g[k];
        if (!close_to(packet.m[k], 0.0, tol)) return false;
        if (!close_to(packet.v[k], r, tol)) return false;
        const double theta = state.theta_bar[k] - cfg.eta * g[k] / (std::sqrt(r) + cfg.epsilon);
        if (!close_to(packet.theta[k], theta, tol)) return false;
      }
      return true;
    }
  }
  return false;
}

Federation::Federation(FederationConfig cfg, OptimConfig optim, LossConfig loss, Shape shape,
                       std::vector<ClientDataset> clients)
    : cfg_(std::move(cfg)), optim_(optim), loss_(loss), shape_(shape), clients_(std::move(clients)) {
  cfg_.validate();
  optim_.validate();
  loss_.validate();
  if (static_cast<int>(clients_.size()) != cfg_.total_clients) {
    throw ConfigError(fmt::format("{} client datasets for {} clients", clients_.size(), cfg_.total_clients));
  }
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    if (clients_[i].client_id != static_cast<int>(i)) throw ConfigError("client datasets must be ordered by id");
  }
  state_ = init_state(shape_, cfg_.seed);
  if (cfg_.model == ModelKind::Fmf) {
    users_.resize(clients_.size());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < users_.size(); ++i) {
      auto rng = make_rng(cfg_.seed, Stream::UserInit, {i});
      users_[i].resize(shape_.dim);
      for (double& x : users_[i]) x = gauss(rng);
    }
  }
  const int first_benign = cfg_.byzantine_count();
  for (int id = first_benign; id < cfg_.total_clients && static_cast<int>(probes_.size()) < cfg_.probe_count; ++id) {
    probes_.push_back(id);
  }
}

ClientRound Federation::client_work(int client_id, bool sampled) const {
  const auto& data = clients_[static_cast<std::size_t>(client_id)];
  const auto round = static_cast<std::uint64_t>(state_.round);
  const auto id = static_cast<std::uint64_t>(client_id);
  const auto negatives =
      sample_negatives(data, loss_.negatives_per_positive, derive_seed(cfg_.seed, Stream::Negatives, {round, id}));
  const ParamsView view(state_.theta_bar, shape_);

  ClientRound out;
  out.client_id = client_id;
  out.sampled = sampled;
  out.byzantine = cfg_.is_byzantine(client_id);
  if (cfg_.model == ModelKind::Fmf) {
    auto grad = fmf_client_gradient(view, users_[static_cast<std::size_t>(client_id)], data, negatives, loss_);
    out.true_gradient = std::move(grad.items);
    out.user_gradient = std::move(grad.user);
  } else {
    out.true_gradient = client_gradient(view, data, negatives, loss_);
  }

  if (!out.byzantine) {
    out.packet = optimizer_update(cfg_.optimizer, state_, out.true_gradient, optim_);
  } else {
    switch (cfg_.attack.type) {
      case AttackType::None:
        out.packet = optimizer_update(cfg_.optimizer, state_, out.true_gradient, optim_);
        break;
      case AttackType::GradientAscent:
        out.packet = gradient_ascent(state_, out.true_gradient, optim_, cfg_.optimizer);
        break;
      case AttackType::Camouflage:
        out.packet = camouflage_packet(state_, out.true_gradient, optim_);
        break;
      case AttackType::AdditiveNoise:
        out.packet = additive_noise(optimizer_update(cfg_.optimizer, state_, out.true_gradient, optim_),
                                    cfg_.attack.sigma, derive_seed(cfg_.seed, Stream::Noise, {round, id}));
        break;
    }
  }
  out.packet.client_id = client_id;
  out.packet.train_count = data.train_count;

  auto recovered = recover_gradient(out.packet, state_, optim_, cfg_.optimizer);
  out.verified = recovered.valid && verify_rules(out.packet, state_, recovered.g, optim_, cfg_.optimizer);
  out.recovered = std::move(recovered.g);
  return out;
}

FilterResult Federation::filter(const std::vector<const ClientRound*>& candidates) const {
  std::vector<int> ids;
  std::vector<std::span<const double>> grads, thetas;
  for (const auto* c : candidates) {
    ids.push_back(c->client_id);
    grads.emplace_back(c->recovered);
    thetas.emplace_back(c->packet.theta);
  }
  const auto n = static_cast<int>(ids.size());
  auto everyone = [&] {
    FilterResult all;
    all.selected = ids;
    return all;
  };

  switch (cfg_.defense.type) {
    case DefenseType::GradientKrum:
    case DefenseType::ParamKrum: {
      if (n < 3) return everyone();
      const int f = std::clamp(cfg_.krum_f(n), 0, n - 3);
      const int keep = std::clamp(cfg_.defense.keep > 0 ? cfg_.defense.keep : n - f, 1, n - f);
      const auto& vectors = cfg_.defense.type == DefenseType::GradientKrum ? grads : thetas;
      return krum_select(ids, vectors, f, keep, cfg_.execution);
    }
    case DefenseType::TrimmedNorm:
      return trimmed_norm_filter(ids, thetas, cfg_.defense.beta);
    case DefenseType::None:
    case DefenseType::Rfa:
    case DefenseType::TrimmedCoordinate:
      return everyone();
  }
  return everyone();
}

RoundLog Federation::run_round() {
  const std::vector<int> sampled = sample_clients(state_.round, cfg_);
  std::vector<int> ids = sampled;
  for (int p : probes_) {
    if (!std::binary_search(sampled.begin(), sampled.end(), p)) ids.push_back(p);
  }

  work_.assign(ids.size(), ClientRound{});
  for_each_index(ids.size(), cfg_.execution,
                 [&](std::size_t k) { work_[k] = client_work(ids[k], k < sampled.size()); });

  RoundLog log;
  log.round = state_.round + 1;
  log.sampled = sampled;
  std::vector<const ClientRound*> candidates;
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    const auto& c = work_[k];
    if (c.byzantine) ++log.byzantine_sampled;
    if (!c.verified) ++log.violations;
    if (c.verified || cfg_.defense.type == DefenseType::None) candidates.push_back(&c);
  }

  FilterResult chosen;
  if (!candidates.empty()) chosen = filter(candidates);
  log.selected = chosen.selected;

  prior_ = state_;
  last_ = RoundData{};
  last_.round = log.round;
  last_.prior = &prior_;
  std::vector<const ClientPacket*> packets;
  for (const auto* c : candidates) {
    if (std::binary_search(chosen.selected.begin(), chosen.selected.end(), c->client_id)) {
      last_.selected.push_back(c);
      packets.push_back(&c->packet);
      if (c->byzantine) ++log.byzantine_selected;
    }
  }
  for (const auto& c : work_) {
    if (!c.byzantine) last_.benign.push_back(&c);
  }

  std::vector<std::span<const double>> benign_theta, byz_theta, benign_grad, byz_grad;
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    const auto& c = work_[k];
    (c.byzantine ? byz_theta : benign_theta).emplace_back(c.packet.theta);
    (c.byzantine ? byz_grad : benign_grad).emplace_back(c.recovered);
  }
  const auto theta_sep = separation(benign_theta, byz_theta);
  const auto grad_sep = separation(benign_grad, byz_grad);
  log.benign_grad_distance = grad_sep.benign_spread;
  log.byzantine_grad_distance = grad_sep.byzantine_spread;
  log.theta_separation = theta_sep.normalized;
  log.grad_separation = grad_sep.normalized;
  log.separation_ratio = grad_sep.normalized > 0.0 ? theta_sep.normalized / grad_sep.normalized : 0.0;

  if (!packets.empty()) {
    auto agg = aggregate(packets, cfg_.defense);
    state_.m_bar = std::move(agg.m);
    state_.v_bar = std::move(agg.v);
    state_.theta_bar = std::move(agg.theta);
  }
  ++state_.round;

  if (cfg_.model == ModelKind::Fmf) {
    for (std::size_t k = 0; k < sampled.size(); ++k) {
      const auto& c = work_[k];
      axpy(-optim_.eta, c.user_gradient, users_[static_cast<std::size_t>(c.client_id)]);
    }
  }
  return log;
}

std::vector<double> Federation::scores_for(int client_id) const {
  const ParamsView view(state_.theta_bar, shape_);
  const auto& data = clients_.at(static_cast<std::size_t>(client_id));
  if (cfg_.model == ModelKind::Fmf) return fmf_predict_all(view, users_[static_cast<std::size_t>(client_id)]);
  return predict_all(view, data, loss_);
}

}  // namespace fedrec
