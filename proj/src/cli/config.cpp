#include "gbn/cli/config.hpp"

#include <fstream>
#include <set>

namespace gbn {

namespace {

using nlohmann::json;

const std::set<std::string> kKeys = {
    "task",      "model",        "seeds",       "config_hash", "n_layers",   "hid_dim",     "activation",
    "transform", "dropout",      "norm",        "lr",          "w_decay",    "epochs",      "seed",
    "patience",  "batch_graphs", "topology",    "distance",    "n_train",    "n_val",       "n_test",
    "block_size", "p_in",        "p_out",       "feature_dim", "mean_shift", "train_frac",  "val_frac",
    "clique_size", "path_len"};

std::string ptr(const std::string& key) { return "/" + key; }

const json* field(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

Index get_int(const json& j, const std::string& key, Index fallback, Index min) {
  const json* v = field(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) throw ConfigError(ptr(key), "expected an integer");
  const Index out = v->get<Index>();
  if (out < min) throw ConfigError(ptr(key), "must be >= " + std::to_string(min));
  return out;
}

double get_real(const json& j, const std::string& key, double fallback) {
  const json* v = field(j, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(ptr(key), "expected a number");
  return v->get<double>();
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
  const json* v = field(j, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(ptr(key), "expected a string");
  return v->get<std::string>();
}

template <class F>
auto parse_enum(const std::string& key, const std::string& value, F parse) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(ptr(key), e.what());
  }
}

std::uint64_t get_seed(const json& v, const std::string& pointer) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(pointer, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

ExperimentConfig resolve_config(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (!kKeys.count(key)) throw ConfigError(ptr(key), "unknown key");

  ExperimentConfig cfg;
  const json* task = field(j, "task");
  if (!task) throw ConfigError("/task", "required");
  if (!task->is_string()) throw ConfigError("/task", "expected a string");
  TrainConfig& t = cfg.train;
  t.task = parse_enum("task", task->get<std::string>(), parse_task);
  cfg.model = parse_enum("model", get_string(j, "model", "gbn"), parse_model_kind);

  // per-task defaults
  std::string act = "tanh", norm = "batch";
  switch (t.task) {
    case TaskKind::Transfer:
      t.hid_dim = 64;
      t.dropout = 0.0;
      t.lr = 1e-3;
      t.epochs = 2000;
      break;
    case TaskKind::Classification:
      t.n_layers = 2;
      t.hid_dim = 512;
      act = "gelu";
      norm = "layer";
      t.dropout = 0.2;
      t.lr = 3e-5;
      t.epochs = 1000;
      break;
    case TaskKind::Bottleneck:
      t.n_layers = 8;
      t.hid_dim = 16;
      norm = "none";
      t.lr = 1e-2;
      t.epochs = 100;
      break;
  }

  if (t.task == TaskKind::Transfer) {
    cfg.topology = parse_enum("topology", get_string(j, "topology", "line"), parse_topology);
    if (!field(j, "distance")) throw ConfigError("/distance", "required for transfer");
    cfg.distance = get_int(j, "distance", 0, 2);
    t.n_layers = cfg.distance;
    cfg.counts.train = get_int(j, "n_train", cfg.counts.train, 1);
    cfg.counts.val = get_int(j, "n_val", cfg.counts.val, 1);
    cfg.counts.test = get_int(j, "n_test", cfg.counts.test, 1);
  }
  if (t.task == TaskKind::Classification) {
    cfg.sbm.block_size = get_int(j, "block_size", cfg.sbm.block_size, 2);
    cfg.sbm.p_in = get_real(j, "p_in", cfg.sbm.p_in);
    cfg.sbm.p_out = get_real(j, "p_out", cfg.sbm.p_out);
    cfg.sbm.feature_dim = get_int(j, "feature_dim", cfg.sbm.feature_dim, 1);
    cfg.sbm.mean_shift = get_real(j, "mean_shift", cfg.sbm.mean_shift);
    for (const char* key : {"p_in", "p_out"}) {
      const double p = key == std::string("p_in") ? cfg.sbm.p_in : cfg.sbm.p_out;
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(ptr(key), "must lie in [0, 1]");
    }
    cfg.train_fraction = get_real(j, "train_frac", cfg.train_fraction);
    cfg.val_fraction = get_real(j, "val_frac", cfg.val_fraction);
    if (!(cfg.train_fraction > 0.0 && cfg.val_fraction > 0.0 && cfg.train_fraction + cfg.val_fraction < 1.0))
      throw ConfigError("/train_frac", "train_frac and val_frac must be positive with a sum below 1");
  }
  if (t.task == TaskKind::Bottleneck) {
    cfg.clique_size = get_int(j, "clique_size", cfg.clique_size, 3);
    cfg.path_len = get_int(j, "path_len", cfg.path_len, 1);
    cfg.bottleneck_counts.train = get_int(j, "n_train", cfg.bottleneck_counts.train, 1);
    cfg.bottleneck_counts.val = get_int(j, "n_val", cfg.bottleneck_counts.val, 1);
    cfg.bottleneck_counts.test = get_int(j, "n_test", cfg.bottleneck_counts.test, 1);
  }

  const Index layers = get_int(j, "n_layers", t.n_layers, 1);
  if (t.task == TaskKind::Transfer && layers != cfg.distance)
    throw ConfigError("/n_layers", "must equal the transfer distance (" + std::to_string(cfg.distance) + ")");
  t.n_layers = layers;
  t.hid_dim = get_int(j, "hid_dim", t.hid_dim, 1);
  t.activation = parse_enum("activation", get_string(j, "activation", act), parse_activation);
  t.transform = parse_enum("transform", get_string(j, "transform", "mlp"), parse_transform);
  t.norm = parse_enum("norm", get_string(j, "norm", norm), parse_norm);
  t.dropout = get_real(j, "dropout", t.dropout);
  if (!(t.dropout >= 0.0 && t.dropout < 1.0)) throw ConfigError("/dropout", "must lie in [0, 1)");
  t.lr = get_real(j, "lr", t.lr);
  if (!(t.lr > 0.0)) throw ConfigError("/lr", "must be > 0");
  t.weight_decay = get_real(j, "w_decay", t.weight_decay);
  if (!(t.weight_decay >= 0.0)) throw ConfigError("/w_decay", "must be >= 0");
  t.epochs = get_int(j, "epochs", t.epochs, 1);
  t.patience = get_int(j, "patience", t.patience, 1);
  t.batch_graphs = get_int(j, "batch_graphs", t.batch_graphs, 1);
  if (const json* s = field(j, "seed")) t.seed = get_seed(*s, "/seed");

  if (const json* s = field(j, "seeds")) {
    if (!s->is_array() || s->empty()) throw ConfigError("/seeds", "expected a non-empty array");
    for (std::size_t k = 0; k < s->size(); ++k) cfg.seeds.push_back(get_seed((*s)[k], "/seeds/" + std::to_string(k)));
  } else {
    cfg.seeds = {t.seed};
  }

  if (const json* h = field(j, "config_hash")) {
    if (!h->is_string()) throw ConfigError("/config_hash", "expected a string");
    if (h->get<std::string>() != config_hash(to_json(cfg)))
      throw ConfigError("/config_hash", "does not match the config contents");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  return resolve_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json j = to_json(cfg.train);
  j["model"] = to_string(cfg.model);
  j["seeds"] = cfg.seeds;
  switch (cfg.train.task) {
    case TaskKind::Transfer:
      j["topology"] = to_string(cfg.topology);
      j["distance"] = cfg.distance;
      j["n_train"] = cfg.counts.train;
      j["n_val"] = cfg.counts.val;
      j["n_test"] = cfg.counts.test;
      break;
    case TaskKind::Classification:
      j["block_size"] = cfg.sbm.block_size;
      j["p_in"] = cfg.sbm.p_in;
      j["p_out"] = cfg.sbm.p_out;
      j["feature_dim"] = cfg.sbm.feature_dim;
      j["mean_shift"] = cfg.sbm.mean_shift;
      j["train_frac"] = cfg.train_fraction;
      j["val_frac"] = cfg.val_fraction;
      break;
    case TaskKind::Bottleneck:
      j["clique_size"] = cfg.clique_size;
      j["path_len"] = cfg.path_len;
      j["n_train"] = cfg.bottleneck_counts.train;
      j["n_val"] = cfg.bottleneck_counts.val;
      j["n_test"] = cfg.bottleneck_counts.test;
      break;
  }
  return j;
}

json config_echo(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j["config_hash"] = config_hash(j);
  return j;
}

}  // namespace gbn
