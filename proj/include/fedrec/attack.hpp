#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedrec/optim.hpp"

namespace fedrec {

enum class AttackType { None, GradientAscent, Camouflage, AdditiveNoise };

struct AttackKind {
  AttackType type = AttackType::None;
  double sigma = 0.0;  // AdditiveNoise only

  void validate(OptimizerKind optimizer) const;
};

std::string to_string(AttackType type);
AttackType parse_attack(const std::string& name);

/// Optimizer update evaluated at -g. The packet obeys the optimizer's rules.
ClientPacket gradient_ascent(const ServerState& state, std::span<const double> g, const OptimConfig& cfg,
                             OptimizerKind kind);

/// Tolerance used both for the relative size of the closed-form denominator and for the
/// update-equality validation.
inline constexpr double kCamouflageTol = 1e-9;

/// Adam update direction without epsilon: (b1*m + (1-b1)*x) / sqrt(b2*v + (1-b2)*x^2).
double adam_direction(double m_bar, double v_bar, double x, double beta1, double beta2);

struct CamouflageComponent {
  double g_tilde = 0.0;
  bool camouflaged = false;
};

/// Closed-form alternative gradient for one coordinate: the second root of the equal-update
/// condition. Falls back to the benign gradient when the denominator is degenerate or when the
/// root realizes the sign-flipped update instead of the same one.
CamouflageComponent camouflage_component(double m_bar, double v_bar, double g, double beta1, double beta2,
                                         double tol = kCamouflageTol);

struct CamouflageResult {
  FlatVec g_tilde;
  std::vector<bool> camouflaged;

  std::size_t camouflaged_count() const;
};

CamouflageResult camouflage_gradient(const ServerState& state, std::span<const double> g, const OptimConfig& cfg);

/// Adam packet computed from the camouflaged gradient: theta matches the benign packet on every
/// camouflaged coordinate while m and v do not.
ClientPacket camouflage_packet(const ServerState& state, std::span<const double> g, const OptimConfig& cfg);

/// Adds iid N(0, sigma^2) noise to theta; m and v are left untouched.
ClientPacket additive_noise(ClientPacket packet, double sigma, std::uint64_t seed);

}  // namespace fedrec
