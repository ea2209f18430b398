#include "fedrec/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "fedrec/error.hpp"

namespace fedrec {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"general", {"profile"}},
      {"data",
       {"source", "path", "format", "users", "items", "latent_dim", "density", "popularity", "split_ratio", "seed"}},
      {"model", {"kind", "dim", "gamma", "lambda", "negatives"}},
      {"optim", {"kind", "eta", "beta1", "beta2", "beta3", "beta4", "epsilon"}},
      {"federation",
       {"byzantine_fraction", "client_ratio", "rounds", "seed", "probes", "warmup", "execution"}},
      {"attack", {"type", "sigma"}},
      {"defense", {"type", "f", "keep", "max_iters", "smoothing", "beta"}},
      {"eval", {"max_k", "every"}},
      {"output", {"dir", "dump_vectors", "allow_violations"}},
  };
  return keys;
}

template <class T>
T read(const pt::ptree& tree, const std::string& key, const T& fallback) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return fallback;
  try {
    return node->get_value<T>();
  } catch (const pt::ptree_bad_data&) {
    throw ConfigError(fmt::format("bad value '{}' for {}", node->data(), key));
  }
}

bool read_bool(const pt::ptree& tree, const std::string& key, bool fallback) {
  const auto text = read<std::string>(tree, key, fallback ? "true" : "false");
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("bad boolean '{}' for {}", text, key));
}

std::string model_name(ModelKind kind) { return kind == ModelKind::Fmf ? "fmf" : "fism"; }

ModelKind parse_model(const std::string& name) {
  if (name == "fism") return ModelKind::Fism;
  if (name == "fmf") return ModelKind::Fmf;
  throw ConfigError("unknown model kind: " + name);
}

std::string format_name(LogFormat format) {
  switch (format) {
    case LogFormat::Auto: return "auto";
    case LogFormat::UserItem: return "tsv-user-item";
    case LogFormat::UserItemRatingTime: return "tsv-user-item-rating-time";
  }
  return "auto";
}

}  // namespace

ExperimentConfig profile_defaults(const std::string& profile) {
  ExperimentConfig cfg;
  cfg.profile = profile;
  if (profile == "paper") {
    cfg.dim = 64;
    cfg.fed.client_ratio = 1e-2;
  } else if (profile == "desk") {
    cfg.dim = 16;
    cfg.fed.client_ratio = 0.5;
  } else {
    throw ConfigError("unknown profile: " + profile);
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (dim < 1) throw ConfigError("model dim must be positive");
  if (max_k < 1) throw ConfigError("eval max_k must be positive");
  if (eval_every < 1) throw ConfigError("eval every must be positive");
  if (!data.synthetic && data.path.empty()) throw ConfigError("data source 'file' needs a path");
  if (!(data.split_ratio > 0.0 && data.split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0, 1)");
  loss.validate();
  optim.validate();
  fed.attack.validate(fed.optimizer);
  fed.defense.validate();
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(e.line(), e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ConfigError("unknown config section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in [{}]", key, section));
    }
  }

  ExperimentConfig cfg = profile_defaults(read<std::string>(tree, "general.profile", "desk"));

  const auto source = read<std::string>(tree, "data.source", "synthetic");
  if (source != "synthetic" && source != "file") throw ConfigError("data source must be synthetic or file");
  cfg.data.synthetic = source == "synthetic";
  const auto path = read<std::string>(tree, "data.path", "");
  if (!path.empty()) {
    std::filesystem::path p(path);
    cfg.data.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  }
  cfg.data.format = parse_log_format(read<std::string>(tree, "data.format", "auto"));
  cfg.data.users = read(tree, "data.users", cfg.data.users);
  cfg.data.items = read(tree, "data.items", cfg.data.items);
  cfg.data.latent_dim = read(tree, "data.latent_dim", cfg.data.latent_dim);
  cfg.data.density = read(tree, "data.density", cfg.data.density);
  cfg.data.popularity = read(tree, "data.popularity", cfg.data.popularity);
  cfg.data.split_ratio = read(tree, "data.split_ratio", cfg.data.split_ratio);
  cfg.data.seed = read<std::int64_t>(tree, "data.seed", cfg.data.seed);

  cfg.fed.model = parse_model(read<std::string>(tree, "model.kind", "fism"));
  cfg.dim = read(tree, "model.dim", cfg.dim);
  cfg.loss.gamma = read(tree, "model.gamma", cfg.loss.gamma);
  cfg.loss.lambda = read(tree, "model.lambda", cfg.loss.lambda);
  cfg.loss.negatives_per_positive = read(tree, "model.negatives", cfg.loss.negatives_per_positive);

  cfg.fed.optimizer = parse_optimizer(read<std::string>(tree, "optim.kind", "adam"));
  cfg.optim.eta = read(tree, "optim.eta", cfg.optim.eta);
  cfg.optim.beta1 = read(tree, "optim.beta1", cfg.optim.beta1);
  cfg.optim.beta2 = read(tree, "optim.beta2", cfg.optim.beta2);
  cfg.optim.beta3 = read(tree, "optim.beta3", cfg.optim.beta3);
  cfg.optim.beta4 = read(tree, "optim.beta4", cfg.optim.beta4);
  cfg.optim.epsilon = read(tree, "optim.epsilon", cfg.optim.epsilon);

  cfg.fed.byzantine_fraction = read(tree, "federation.byzantine_fraction", cfg.fed.byzantine_fraction);
  cfg.fed.client_ratio = read(tree, "federation.client_ratio", cfg.fed.client_ratio);
  cfg.fed.rounds = read(tree, "federation.rounds", cfg.fed.rounds);
  cfg.fed.seed = read<std::uint64_t>(tree, "federation.seed", cfg.fed.seed);
  cfg.fed.probe_count = read(tree, "federation.probes", cfg.fed.probe_count);
  cfg.fed.warmup = read(tree, "federation.warmup", cfg.fed.warmup);
  const auto execution = read<std::string>(tree, "federation.execution", "parallel");
  if (execution != "parallel" && execution != "serial") throw ConfigError("execution must be parallel or serial");
  cfg.fed.execution = execution == "serial" ? Execution::Serial : Execution::Parallel;

  cfg.fed.attack.type = parse_attack(read<std::string>(tree, "attack.type", "none"));
  cfg.fed.attack.sigma = read(tree, "attack.sigma", cfg.fed.attack.sigma);

  cfg.fed.defense.type = parse_defense(read<std::string>(tree, "defense.type", "none"));
  cfg.fed.defense.f = read(tree, "defense.f", cfg.fed.defense.f);
  cfg.fed.defense.keep = read(tree, "defense.keep", cfg.fed.defense.keep);
  cfg.fed.defense.max_iters = read(tree, "defense.max_iters", cfg.fed.defense.max_iters);
  cfg.fed.defense.smoothing = read(tree, "defense.smoothing", cfg.fed.defense.smoothing);
  cfg.fed.defense.beta = read(tree, "defense.beta", cfg.fed.defense.beta);

  cfg.max_k = read(tree, "eval.max_k", cfg.max_k);
  cfg.eval_every = read(tree, "eval.every", cfg.eval_every);

  const auto out_dir = read<std::string>(tree, "output.dir", cfg.output_dir.string());
  cfg.output_dir = out_dir;
  cfg.dump_vectors = read_bool(tree, "output.dump_vectors", cfg.dump_vectors);
  cfg.allow_violations = read_bool(tree, "output.allow_violations", cfg.allow_violations);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::string out;
  auto line = [&](std::string_view key, const auto& value) { out += fmt::format("{} = {}\n", key, value); };
  out += "[general]\n";
  line("profile", cfg.profile);
  out += "\n[data]\n";
  line("source", cfg.data.synthetic ? "synthetic" : "file");
  if (!cfg.data.path.empty()) line("path", cfg.data.path.string());
  line("format", format_name(cfg.data.format));
  line("users", cfg.data.users);
  line("items", cfg.data.items);
  line("latent_dim", cfg.data.latent_dim);
  line("density", cfg.data.density);
  line("popularity", cfg.data.popularity);
  line("split_ratio", cfg.data.split_ratio);
  line("seed", cfg.data.seed);
  out += "\n[model]\n";
  line("kind", model_name(cfg.fed.model));
  line("dim", cfg.dim);
  line("gamma", cfg.loss.gamma);
  line("lambda", cfg.loss.lambda);
  line("negatives", cfg.loss.negatives_per_positive);
  out += "\n[optim]\n";
  line("kind", to_string(cfg.fed.optimizer));
  line("eta", cfg.optim.eta);
  line("beta1", cfg.optim.beta1);
  line("beta2", cfg.optim.beta2);
  line("beta3", cfg.optim.beta3);
  line("beta4", cfg.optim.beta4);
  line("epsilon", cfg.optim.epsilon);
  out += "\n[federation]\n";
  line("byzantine_fraction", cfg.fed.byzantine_fraction);
  line("client_ratio", cfg.fed.client_ratio);
  line("rounds", cfg.fed.rounds);
  line("seed", cfg.fed.seed);
  line("probes", cfg.fed.probe_count);
  line("warmup", cfg.fed.warmup);
  line("execution", cfg.fed.execution == Execution::Serial ? "serial" : "parallel");
  out += "\n[attack]\n";
  line("type", to_string(cfg.fed.attack.type));
  line("sigma", cfg.fed.attack.sigma);
  out += "\n[defense]\n";
  line("type", to_string(cfg.fed.defense.type));
  line("f", cfg.fed.defense.f);
  line("keep", cfg.fed.defense.keep);
  line("max_iters", cfg.fed.defense.max_iters);
  line("smoothing", cfg.fed.defense.smoothing);
  line("beta", cfg.fed.defense.beta);
  out += "\n[eval]\n";
  line("max_k", cfg.max_k);
  line("every", cfg.eval_every);
  out += "\n[output]\n";
  line("dir", cfg.output_dir.string());
  line("dump_vectors", cfg.dump_vectors ? "true" : "false");
  line("allow_violations", cfg.allow_violations ? "true" : "false");
  return out;
}

}  // namespace fedrec
