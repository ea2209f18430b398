#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fedrec/config.hpp"
#include "fedrec/error.hpp"
#include "fedrec/experiment.hpp"
#include "fedrec/kernels.hpp"

namespace {

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double f = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(f);
    } catch (const std::exception&) {
      throw fedrec::ConfigError("bad Byzantine fraction: " + item);
    }
  }
  if (out.empty()) throw fedrec::ConfigError("no Byzantine fractions given");
  return out;
}

std::vector<fedrec::DefenseType> parse_defenses(const std::string& text) {
  using fedrec::DefenseType;
  if (text == "all") {
    return {DefenseType::GradientKrum, DefenseType::ParamKrum, DefenseType::Rfa, DefenseType::TrimmedNorm};
  }
  std::vector<DefenseType> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(fedrec::parse_defense(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Byzantine-robust federated recommendation simulator"};
  app.require_subcommand(1);

  std::string run_config;
  std::string out_override;
  bool allow_violations = false;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", run_config, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", out_override, "Override the output directory");
  run->add_flag("--allow-violations", allow_violations, "Exit 0 even if resilience checks fail");

  std::string grid_config;
  std::string fractions = "0.2,0.3,0.4";
  std::string defenses = "all";
  auto* grid = app.add_subcommand("grid", "Run the Byzantine-fraction x defense grid");
  grid->add_option("config", grid_config, "Base config file")->required()->check(CLI::ExistingFile);
  grid->add_option("--byzantine", fractions, "Comma-separated Byzantine fractions");
  grid->add_option("--defense", defenses, "Comma-separated defenses, or 'all'");
  grid->add_option("-o,--output", out_override, "Override the output root");
  grid->add_flag("--allow-violations", allow_violations, "Exit 0 even if resilience checks fail");

  std::vector<std::string> dirs;
  auto* compare = app.add_subcommand("compare", "Tabulate final-round precision across result directories");
  compare->add_option("dirs", dirs, "Result directories")->required()->expected(2, -1);

  CLI11_PARSE(app, argc, argv);

  try {
    fedrec::configure_workers_from_env();
    if (*run) {
      auto cfg = fedrec::load_config(run_config);
      if (!out_override.empty()) cfg.output_dir = out_override;
      if (allow_violations) cfg.allow_violations = true;
      const int status = fedrec::run_and_write(cfg);
      std::cout << fmt::format("wrote {}\n", cfg.output_dir.string());
      if (status != 0) std::cerr << "resilience checks reported violations (see resilience.csv)\n";
      return status;
    }
    if (*grid) {
      auto cfg = fedrec::load_config(grid_config);
      if (!out_override.empty()) cfg.output_dir = out_override;
      if (allow_violations) cfg.allow_violations = true;
      const auto entries = fedrec::run_grid(cfg, parse_fractions(fractions), parse_defenses(defenses));
      int status = 0;
      for (const auto& e : entries) {
        std::cout << fmt::format("{} {}\n", e.status == 0 ? "ok  " : "FAIL", e.dir.string());
        if (!e.error.empty()) std::cerr << fmt::format("{}: {}\n", e.dir.string(), e.error);
        if (e.status != 0) status = 1;
      }
      return status;
    }
    if (*compare) {
      std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
      std::cout << fedrec::format_compare(fedrec::compare_runs(paths));
      return 0;
    }
  } catch (const fedrec::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const fedrec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
