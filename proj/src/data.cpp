#include "fedrec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "fedrec/error.hpp"
#include "fedrec/rng.hpp"

namespace fedrec {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

long long parse_id(std::string_view field, std::size_t line_no) {
  long long value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(line_no, fmt::format("expected an integer id, got '{}'", field));
  }
  return value;
}

std::map<long long, int> dense_ids(std::vector<long long> raw) {
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  std::map<long long, int> out;
  for (std::size_t i = 0; i < raw.size(); ++i) out.emplace(raw[i], static_cast<int>(i));
  return out;
}

}  // namespace

LogFormat parse_log_format(const std::string& name) {
  if (name == "auto") return LogFormat::Auto;
  if (name == "tsv-user-item") return LogFormat::UserItem;
  if (name == "tsv-user-item-rating-time") return LogFormat::UserItemRatingTime;
  throw ConfigError("unknown log format: " + name);
}

InteractionLog make_log(std::vector<std::pair<int, int>> records, int num_users, int num_items) {
  std::sort(records.begin(), records.end());
  records.erase(std::unique(records.begin(), records.end()), records.end());
  InteractionLog log;
  log.num_users = num_users;
  log.num_items = num_items;
  for (const auto& [u, i] : records) {
    if (u < 0 || i < 0) throw IndexError("negative id in interaction log");
    log.num_users = std::max(log.num_users, u + 1);
    log.num_items = std::max(log.num_items, i + 1);
  }
  log.records = std::move(records);
  return log;
}

InteractionLog ingest_stream(std::istream& in, LogFormat format) {
  std::vector<std::pair<long long, long long>> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    const std::size_t expected = format == LogFormat::UserItem             ? 2
                                 : format == LogFormat::UserItemRatingTime ? 4
                                                                           : fields.size();
    if ((fields.size() != 2 && fields.size() != 4) || fields.size() != expected) {
      throw ParseError(line_no, fmt::format("expected {} tab-separated columns, found {}",
                                            format == LogFormat::Auto ? std::string("2 or 4")
                                                                      : std::to_string(expected),
                                            fields.size()));
    }
    raw.emplace_back(parse_id(fields[0], line_no), parse_id(fields[1], line_no));
  }
  if (raw.empty()) throw EmptyDataError("interaction log is empty");

  std::vector<long long> users, items;
  for (const auto& [u, i] : raw) {
    users.push_back(u);
    items.push_back(i);
  }
  const auto user_ids = dense_ids(std::move(users));
  const auto item_ids = dense_ids(std::move(items));
  std::vector<std::pair<int, int>> records;
  records.reserve(raw.size());
  for (const auto& [u, i] : raw) records.emplace_back(user_ids.at(u), item_ids.at(i));
  return make_log(std::move(records), static_cast<int>(user_ids.size()), static_cast<int>(item_ids.size()));
}

InteractionLog ingest(const std::filesystem::path& path, LogFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return ingest_stream(in, format);
}

void write_log(const InteractionLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [u, i] : log.records) out << u << '\t' << i << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

SplitDataset split(const InteractionLog& log, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  std::vector<std::vector<int>> per_user(static_cast<std::size_t>(log.num_users));
  for (const auto& [u, i] : log.records) per_user[static_cast<std::size_t>(u)].push_back(i);

  SplitDataset out;
  out.num_items = log.num_items;
  out.train.resize(per_user.size());
  out.test.resize(per_user.size());
  out.eval_excluded.assign(per_user.size(), false);
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto items = per_user[u];
    if (items.size() < 2) {
      out.train[u] = items;
      out.eval_excluded[u] = true;
      continue;
    }
    auto rng = make_rng(seed, Stream::Split, {u});
    std::shuffle(items.begin(), items.end(), rng);
    const auto train_size =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(ratio * static_cast<double>(items.size()))));
    out.train[u].assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(train_size));
    out.test[u].assign(items.begin() + static_cast<std::ptrdiff_t>(train_size), items.end());
    std::sort(out.train[u].begin(), out.train[u].end());
    std::sort(out.test[u].begin(), out.test[u].end());
    if (out.test[u].empty()) out.eval_excluded[u] = true;
  }
  return out;
}

InteractionLog synthesize(int num_users, int num_items, int latent_dim, double density, std::uint64_t seed,
                          double popularity) {
  if (num_users < 1 || num_items < 2 || latent_dim < 1) throw ConfigError("synthesize: sizes must be positive");
  if (!(density > 0.0 && density < 1.0)) throw ConfigError("synthesize: density must lie in (0, 1)");
  if (popularity < 0.0) throw ConfigError("synthesize: popularity must be non-negative");

  auto rng = make_rng(seed, Stream::Synthesize);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto d = static_cast<std::size_t>(latent_dim);
  std::vector<double> users(static_cast<std::size_t>(num_users) * d);
  std::vector<double> items(static_cast<std::size_t>(num_items) * d);
  std::vector<double> bias(static_cast<std::size_t>(num_items), 0.0);
  for (double& x : users) x = gauss(rng);
  for (double& x : items) x = gauss(rng);
  for (double& b : bias) b = popularity * gauss(rng);

  const auto per_user = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::lround(density * static_cast<double>(num_items))));
  std::vector<std::pair<int, int>> records;
  std::vector<std::pair<double, int>> affinity(static_cast<std::size_t>(num_items));
  for (int u = 0; u < num_users; ++u) {
    const std::span<const double> uf(users.data() + static_cast<std::size_t>(u) * d, d);
    for (int i = 0; i < num_items; ++i) {
      const std::span<const double> vf(items.data() + static_cast<std::size_t>(i) * d, d);
      affinity[static_cast<std::size_t>(i)] = {dot(uf, vf) / std::sqrt(static_cast<double>(d)) + bias[static_cast<std::size_t>(i)], i};
    }
    std::partial_sort(affinity.begin(), affinity.begin() + static_cast<std::ptrdiff_t>(per_user), affinity.end(),
                      [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (std::size_t r = 0; r < per_user; ++r) records.emplace_back(u, affinity[r].second);
  }
  return make_log(std::move(records), num_users, num_items);
}

std::vector<ClientDataset> make_client_datasets(const SplitDataset& data) {
  std::vector<ClientDataset> out;
  out.reserve(data.train.size());
  for (std::size_t u = 0; u < data.train.size(); ++u) {
    out.push_back(make_client_dataset(static_cast<int>(u), data.train[u], static_cast<std::size_t>(data.num_items),
                                      data.test[u]));
  }
  return out;
}

}  // namespace fedrec
