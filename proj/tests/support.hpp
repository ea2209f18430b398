#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fedrec/optim.hpp"
#include "fedrec/params.hpp"

namespace testing {

inline std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

inline std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) worst = std::max(worst, rel_err(a[i], b[i]));
  return worst;
}

/// Random mid-training state: m free, v and r nonnegative.
inline fedrec::ServerState random_state(std::mt19937_64& rng, std::size_t n, int round) {
  fedrec::ServerState s;
  s.m_bar = gaussian(rng, n, 0.5);
  s.v_bar = uniform(rng, n, 0.0, 1.0);
  s.theta_bar = gaussian(rng, n);
  s.round = round;
  return s;
}

/// Adam moments built from a short history of gradients that share a per-coordinate mean, as a
/// real run would produce them. Early on v stays far below m^2, which is where camouflage bites.
inline fedrec::ServerState adam_history_state(std::mt19937_64& rng, std::size_t n, double beta1 = 0.9,
                                              double beta2 = 0.999) {
  std::uniform_int_distribution<int> rounds(1, 50);
  std::uniform_real_distribution<double> spread(0.1, 2.0);
  std::normal_distribution<double> unit(0.0, 1.0);
  fedrec::ServerState s;
  s.m_bar.assign(n, 0.0);
  s.v_bar.assign(n, 0.0);
  s.theta_bar = gaussian(rng, n);
  s.round = rounds(rng);
  for (std::size_t k = 0; k < n; ++k) {
    const double mu = unit(rng), sd = spread(rng);
    for (int t = 0; t < s.round; ++t) {
      const double x = mu + sd * unit(rng);
      s.m_bar[k] = beta1 * s.m_bar[k] + (1 - beta1) * x;
      s.v_bar[k] = beta2 * s.v_bar[k] + (1 - beta2) * x * x;
    }
  }
  return s;
}

}  // namespace testing
