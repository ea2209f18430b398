#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedrec/config.hpp"
#include "fedrec/eval.hpp"
#include "fedrec/fed.hpp"
#include "fedrec/resilience.hpp"

namespace fedrec {

struct MetricRow {
  int round = 0;
  MetricReport report;
};

struct ExperimentResult {
  std::vector<MetricRow> metrics;
  std::vector<RoundLog> rounds;
  std::vector<LedgerRow> ledger;
  ChainReport chain;
  ServerState final_state;

  const MetricReport& final_metrics() const { return metrics.back().report; }
  bool passed() const noexcept { return chain.violations.empty(); }
};

/// Loads or synthesizes the data and splits it.
SplitDataset prepare_data(const ExperimentConfig& cfg);

/// Runs the full federation in memory. When `dump_dir` is set, per-round gradient and parameter
/// CSVs are written under it.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

void write_metrics_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_resilience_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_roundlog_csv(const ExperimentResult& result, const std::filesystem::path& path);

/// run: experiment plus every artifact in cfg.output_dir. Returns the process exit status.
int run_and_write(const ExperimentConfig& cfg);

struct GridEntry {
  std::filesystem::path dir;
  double byzantine_fraction = 0.0;
  DefenseType defense = DefenseType::None;
  int status = 0;
  std::string error;
};

/// Runs every (fraction, defense) combination, one experiment per worker.
std::vector<GridEntry> run_grid(const ExperimentConfig& base, const std::vector<double>& fractions,
                                const std::vector<DefenseType>& defenses);

struct CompareRow {
  std::filesystem::path dir;
  std::string label;
  int round = 0;
  std::vector<double> precision;  // final-round P@1..P@K
  double improvement = 0.0;       // relative P@1 gain over the best other row
};

std::vector<CompareRow> compare_runs(const std::vector<std::filesystem::path>& dirs);
std::string format_compare(const std::vector<CompareRow>& rows);

}  // namespace fedrec
