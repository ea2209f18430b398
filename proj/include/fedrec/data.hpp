#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "fedrec/fism.hpp"

namespace fedrec {

/// Implicit-feedback interactions with dense 0-based ids, sorted by (user, item), no duplicates.
struct InteractionLog {
  std::vector<std::pair<int, int>> records;
  int num_users = 0;
  int num_items = 0;

  bool operator==(const InteractionLog&) const = default;
};

enum class LogFormat { Auto, UserItem, UserItemRatingTime };

LogFormat parse_log_format(const std::string& name);

/// Reads a tab-separated log. Ratings and timestamps are ignored; ids are remapped densely in
/// ascending order of the original ids.
InteractionLog ingest(const std::filesystem::path& path, LogFormat format = LogFormat::Auto);
InteractionLog ingest_stream(std::istream& in, LogFormat format = LogFormat::Auto);

/// Writes the 2-column form.
void write_log(const InteractionLog& log, const std::filesystem::path& path);

/// Normalises an arbitrary record list: dedup, sort, counts from the largest ids.
InteractionLog make_log(std::vector<std::pair<int, int>> records, int num_users, int num_items);

struct SplitDataset {
  int num_items = 0;
  std::vector<std::vector<int>> train;  // sorted
  std::vector<std::vector<int>> test;   // sorted
  std::vector<bool> eval_excluded;

  int num_users() const noexcept { return static_cast<int>(train.size()); }
};

/// Per-user shuffle, train = max(1, floor(ratio * count)). Users with fewer than two positives
/// keep everything in train and are excluded from evaluation.
SplitDataset split(const InteractionLog& log, double ratio, std::uint64_t seed);

/// Planted latent-factor log: every user interacts with the items whose affinity lies above the
/// user's (1 - density) quantile, at least two items each. `popularity` adds a shared item bias
/// with that standard deviation.
InteractionLog synthesize(int num_users, int num_items, int latent_dim, double density, std::uint64_t seed,
                          double popularity = 0.0);

/// One ClientDataset per user. Test positives are excluded from the negative candidates.
std::vector<ClientDataset> make_client_datasets(const SplitDataset& data);

}  // namespace fedrec
