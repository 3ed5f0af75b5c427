#pragma once

#include "gbn/bench/synth.hpp"
#include "gbn/train/train.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbn {

/// Schema violation; `pointer()` is the JSON pointer of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct ExperimentConfig {
  TrainConfig train;
  ModelKind model = ModelKind::Gbn;
  std::vector<std::uint64_t> seeds;  // one run per seed; defaults to {train.seed}

  // transfer
  Topology topology = Topology::Line;
  Index distance = 0;
  TransferCounts counts;

  // classification (SBM stand-in unless a graph is supplied on the command line)
  SbmOptions sbm;
  double train_fraction = 0.5;
  double val_fraction = 0.25;

  // bottleneck
  Index clique_size = 5;
  Index path_len = 3;
  TransferCounts bottleneck_counts{200, 50, 50};
};

/// Resolves a config object: fills per-task defaults, rejects unknown keys and
/// invalid values. A "config_hash" key, as written in run echoes, must match.
ExperimentConfig resolve_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config as JSON (every field explicit).
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Resolved config plus its hash; feeding it back to resolve_config
/// reproduces the run.
nlohmann::json config_echo(const ExperimentConfig& cfg);

}  // namespace gbn
