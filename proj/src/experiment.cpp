#include "fedrec/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fedrec/error.hpp"

namespace fedrec {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string join_ids(const std::vector<int>& ids) {
  return fmt::format("{}", fmt::join(ids, ";"));
}

void dump_vectors(const Federation& fed, int round, const fs::path& dir) {
  const auto& work = fed.last_work();
  const auto& selected = fed.last_round().selected;
  auto is_selected = [&](int id) {
    return std::any_of(selected.begin(), selected.end(), [&](const ClientRound* c) { return c->client_id == id; });
  };
  for (const bool gradients : {true, false}) {
    const auto path = dir / fmt::format("round_{:03}_{}.csv", round, gradients ? "gradients" : "params");
    auto out = open_out(path);
    const std::size_t n = fed.state().size();
    out << "client_id,byzantine,selected";
    for (std::size_t k = 0; k < n; ++k) out << ",x" << k;
    out << '\n';
    for (const auto& c : work) {
      if (!c.sampled) continue;
      const auto& values = gradients ? c.recovered : c.packet.theta;
      out << c.client_id << ',' << (c.byzantine ? 1 : 0) << ',' << (is_selected(c.client_id) ? 1 : 0) << ','
          << to_csv_row(values) << '\n';
    }
    finish(out, path);
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

SplitDataset prepare_data(const ExperimentConfig& cfg) {
  const InteractionLog log =
      cfg.data.synthetic ? synthesize(cfg.data.users, cfg.data.items, cfg.data.latent_dim, cfg.data.density,
                                      cfg.data_seed(), cfg.data.popularity)
                         : ingest(cfg.data.path, cfg.data.format);
  return split(log, cfg.data.split_ratio, cfg.data_seed());
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::optional<fs::path>& dump_dir) {
  cfg.validate();
  const SplitDataset data = prepare_data(cfg);
  FederationConfig fc = cfg.fed;
  fc.total_clients = data.num_users();
  const Shape shape{static_cast<std::size_t>(data.num_items), static_cast<std::size_t>(cfg.dim)};
  Federation fed(fc, cfg.optim, cfg.loss, shape, make_client_datasets(data));

  std::vector<EvalUser> eval_users;
  for (int u = 0; u < data.num_users(); ++u) {
    const auto idx = static_cast<std::size_t>(u);
    if (fc.is_byzantine(u) || data.eval_excluded[idx]) continue;
    eval_users.push_back({u, data.train[idx], data.test[idx]});
  }
  if (eval_users.empty()) throw EmptyDataError("no benign users with test data");
  const auto scores = [&fed](int id) { return fed.scores_for(id); };

  if (dump_dir) fs::create_directories(*dump_dir);

  ExperimentResult result;
  ResilienceLedger ledger;
  ledger.warmup = fc.warmup;
  for (int t = 1; t <= fc.rounds; ++t) {
    result.rounds.push_back(fed.run_round());
    const RoundData& round = fed.last_round();
    observe_witnesses(ledger, round);
    const ChainReport report = check_chain(fc.optimizer, round, ledger, cfg.optim);
    accumulate(ledger, round);
    result.ledger.push_back(snapshot(ledger, t, static_cast<long long>(report.violations.size())));
    result.chain.merge(report);
    if (dump_dir) dump_vectors(fed, t, *dump_dir);
    if (t % cfg.eval_every == 0 || t == fc.rounds) {
      result.metrics.push_back({t, evaluate(eval_users, scores, cfg.max_k, fc.execution)});
    }
  }
  result.final_state = fed.state();
  return result;
}

void write_metrics_csv(const ExperimentResult& result, const fs::path& path) {
  auto out = open_out(path);
  const std::size_t max_k = result.metrics.empty() ? 0 : result.metrics.front().report.precision_at.size();
  out << "round";
  for (std::size_t k = 1; k <= max_k; ++k) out << ",precision@" << k;
  for (std::size_t k = 1; k <= max_k; ++k) out << ",recall@" << k;
  out << '\n';
  for (const auto& row : result.metrics) {
    out << fmt::format("{},{},{}\n", row.round, fmt::join(row.report.precision_at, ","),
                       fmt::join(row.report.recall_at, ","));
  }
  finish(out, path);
}

void write_resilience_csv(const ExperimentResult& result, const fs::path& path) {
  auto out = open_out(path);
  out << "round,sum_g,sum_m,sum_v,sum_theta,g_max,v_min,violations\n";
  for (const auto& r : result.ledger) {
    out << fmt::format("{},{},{},{},{},{},{},{}\n", r.round, r.sum_g, r.sum_m, r.sum_v, r.sum_theta, r.g_max, r.v_min,
                       r.violations);
  }
  finish(out, path);
}

void write_roundlog_csv(const ExperimentResult& result, const fs::path& path) {
  auto out = open_out(path);
  out << "round,sampled,selected,byzantine_sampled,byzantine_selected,rule_violations,"
         "benign_grad_distance,byzantine_grad_distance,theta_separation,grad_separation,separation_ratio\n";
  for (const auto& r : result.rounds) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.round, join_ids(r.sampled), join_ids(r.selected),
                       r.byzantine_sampled, r.byzantine_selected, r.violations, r.benign_grad_distance,
                       r.byzantine_grad_distance, r.theta_separation, r.grad_separation, r.separation_ratio);
  }
  finish(out, path);
}

int run_and_write(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", cfg.output_dir.string(), ec.message()));
  std::optional<fs::path> dump;
  if (cfg.dump_vectors) dump = cfg.output_dir / "vectors";
  const auto result = run_experiment(cfg, dump);
  write_metrics_csv(result, cfg.output_dir / "metrics.csv");
  write_resilience_csv(result, cfg.output_dir / "resilience.csv");
  write_roundlog_csv(result, cfg.output_dir / "roundlog.csv");
  {
    const auto path = cfg.output_dir / "config.ini";
    auto out = open_out(path);
    out << to_ini(cfg);
    finish(out, path);
  }
  return result.passed() || cfg.allow_violations ? 0 : 1;
}

std::vector<GridEntry> run_grid(const ExperimentConfig& base, const std::vector<double>& fractions,
                                const std::vector<DefenseType>& defenses) {
  std::vector<GridEntry> entries;
  for (double f : fractions) {
    for (auto d : defenses) {
      GridEntry e;
      e.byzantine_fraction = f;
      e.defense = d;
      e.dir = base.output_dir / fmt::format("byz{}_{}", std::lround(f * 100.0), to_string(d));
      entries.push_back(e);
    }
  }
  for_each_index(entries.size(), Execution::Parallel, [&](std::size_t i) {
    auto& e = entries[i];
    ExperimentConfig cfg = base;
    cfg.fed.byzantine_fraction = e.byzantine_fraction;
    cfg.fed.defense.type = e.defense;
    cfg.fed.execution = Execution::Serial;
    cfg.output_dir = e.dir;
    try {
      e.status = run_and_write(cfg);
    } catch (const std::exception& ex) {
      e.status = 1;
      e.error = ex.what();
    }
  });
  return entries;
}

std::vector<CompareRow> compare_runs(const std::vector<fs::path>& dirs) {
  if (dirs.size() < 2) throw ConfigError("compare needs at least two result directories");
  std::vector<CompareRow> rows;
  for (const auto& dir : dirs) {
    const auto path = dir / "metrics.csv";
    std::ifstream in(path);
    if (!in) throw IoError(fmt::format("{}: missing metrics.csv", dir.string()));
    std::string line;
    if (!std::getline(in, line)) throw IoError(fmt::format("{}: metrics.csv is empty", dir.string()));
    const auto header = split_csv(line);
    std::size_t max_k = 0;
    while (max_k + 1 < header.size() && header[max_k + 1] == fmt::format("precision@{}", max_k + 1)) ++max_k;
    if (header.empty() || header[0] != "round" || max_k == 0 || header.size() != 1 + 2 * max_k) {
      throw IoError(fmt::format("{}: metrics.csv has an unexpected header", dir.string()));
    }
    CompareRow row;
    row.dir = dir;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto fields = split_csv(line);
      if (fields.size() != header.size()) {
        throw ParseError(line_no, fmt::format("{}: malformed metrics row", dir.string()));
      }
      try {
        const int round = std::stoi(fields[0]);
        if (round < row.round) continue;
        row.round = round;
        row.precision.clear();
        for (std::size_t k = 1; k <= max_k; ++k) row.precision.push_back(std::stod(fields[k]));
      } catch (const std::logic_error&) {
        throw ParseError(line_no, fmt::format("{}: malformed metrics row", dir.string()));
      }
    }
    if (row.precision.empty()) throw IoError(fmt::format("{}: metrics.csv has no rows", dir.string()));

    row.label = dir.filename().string();
    std::ifstream cfg_in(dir / "config.ini");
    if (cfg_in) {
      try {
        const auto cfg = parse_config(cfg_in, dir);
        row.label = fmt::format("{} / {} / byz {}", to_string(cfg.fed.defense.type), to_string(cfg.fed.attack.type),
                                cfg.fed.byzantine_fraction);
      } catch (const Error&) {
        // keep the directory name
      }
    }
    rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double best_other = 0.0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (j != i) best_other = std::max(best_other, rows[j].precision.front());
    }
    rows[i].improvement = best_other > 0.0 ? (rows[i].precision.front() - best_other) / best_other : 0.0;
  }
  return rows;
}

std::string format_compare(const std::vector<CompareRow>& rows) {
  std::size_t max_k = 0;
  std::size_t width = 5;
  for (const auto& r : rows) {
    max_k = std::max(max_k, r.precision.size());
    width = std::max(width, r.dir.string().size());
  }
  std::string out = fmt::format("{:<{}}  {:<40} {:>5}", "run", width, "label", "round");
  for (std::size_t k = 1; k <= max_k; ++k) out += fmt::format(" {:>8}", fmt::format("P@{}", k));
  out += fmt::format(" {:>12}\n", "improvement");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:<40} {:>5}", r.dir.string(), width, r.label, r.round);
    for (std::size_t k = 0; k < max_k; ++k) {
      out += k < r.precision.size() ? fmt::format(" {:>8.4f}", r.precision[k]) : fmt::format(" {:>8}", "-");
    }
    out += fmt::format(" {:>11.1f}%\n", 100.0 * r.improvement);
  }
  return out;
}

}  // namespace fedrec
