#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>

#include "fedrec/data.hpp"
#include "fedrec/fed.hpp"

namespace fedrec {

struct DataSource {
  bool synthetic = true;
  std::filesystem::path path;
  LogFormat format = LogFormat::Auto;
  int users = 90;
  int items = 200;
  int latent_dim = 4;
  double density = 0.1;
  double popularity = 0.0;
  double split_ratio = 0.8;
  std::int64_t seed = -1;  // -1 follows the federation seed
};

struct ExperimentConfig {
  std::string profile = "desk";
  DataSource data;
  int dim = 16;
  LossConfig loss;
  OptimConfig optim;
  FederationConfig fed;  // total_clients is filled from the data
  int max_k = 5;
  int eval_every = 1;
  std::filesystem::path output_dir = "results";
  bool dump_vectors = false;
  bool allow_violations = false;

  std::uint64_t data_seed() const {
    return data.seed >= 0 ? static_cast<std::uint64_t>(data.seed) : fed.seed;
  }
  void validate() const;
};

/// Profile defaults. "paper": d=64, eta=1e-3, e=1e-2. "desk": d=16, e=0.5, other values as paper.
ExperimentConfig profile_defaults(const std::string& profile);

/// Parses the sectioned key=value format documented in the README. Unknown sections or keys
/// are rejected. Relative data paths resolve against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const ExperimentConfig& cfg);

}  // namespace fedrec
