#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedrec/kernels.hpp"
#include "fedrec/optim.hpp"

namespace fedrec {

enum class DefenseType { None, GradientKrum, ParamKrum, Rfa, TrimmedNorm, TrimmedCoordinate };

std::string to_string(DefenseType type);
DefenseType parse_defense(const std::string& name);

struct DefenseKind {
  DefenseType type = DefenseType::None;
  int f = -1;              // assumed Byzantine count per round; -1 derives it from the Byzantine fraction
  int keep = -1;           // Multi-Krum selection size; -1 means n' - f
  int max_iters = 100;     // Weiszfeld iterations
  double smoothing = 1e-6; // Weiszfeld distance floor
  double beta = 0.1;       // trimming fraction per side

  void validate() const;
};

struct FilterResult {
  std::vector<int> selected;      // ascending client ids
  std::map<int, double> scores;   // diagnostic score per client
};

/// Multi-Krum. score(i) is the sum of the n'-f-2 smallest squared distances from vector i to the
/// others; the `keep` lowest scores are selected, ties broken by ascending id.
FilterResult krum_select(std::span<const int> ids, const std::vector<std::span<const double>>& vectors, int f,
                         int keep, Execution exec = Execution::Serial);

struct GeometricMedianResult {
  FlatVec median;
  std::vector<double> objective;  // smoothed objective at the start point and after each iteration
  int iterations = 0;
};

/// Smoothed Weiszfeld iteration started at the weighted mean. Stops after max_iters or once a
/// step moves less than 1e-10. The recorded objective uses the Huber-smoothed distance that the
/// iteration majorizes, so it never increases; it equals sum w_i ||x_i - z|| whenever every
/// distance is at least `smoothing`.
GeometricMedianResult geometric_median(const std::vector<std::span<const double>>& vectors,
                                       std::span<const double> weights, int max_iters, double smoothing);

double weighted_distance_sum(const std::vector<std::span<const double>>& vectors, std::span<const double> weights,
                             std::span<const double> z);

/// Norm-based trimming on theta: drops the floor(beta * n') largest and smallest norms. Packets
/// whose norm ties a kept boundary norm are kept as well.
FilterResult trimmed_norm_filter(std::span<const int> ids, const std::vector<std::span<const double>>& thetas,
                                 double beta);

/// Coordinate-wise trimmed mean (unweighted), dropping floor(beta * n) values per side.
FlatVec coordinate_trimmed_mean(const std::vector<std::span<const double>>& vectors, double beta);

struct Aggregate {
  FlatVec m;
  FlatVec v;
  FlatVec theta;
};

/// Combines the packets of F_t. Weighted mean with n^i / N weights for every rule except Rfa
/// (weighted geometric median) and TrimmedCoordinate (coordinate-wise trimmed mean).
Aggregate aggregate(const std::vector<const ClientPacket*>& packets, const DefenseKind& rule);

}  // namespace fedrec
