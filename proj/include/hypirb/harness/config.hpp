#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypirb/adversarial/baselines.hpp"
#include "hypirb/adversarial/domain.hpp"
#include "hypirb/adversarial/trainer.hpp"
#include "hypirb/degradation/preremoval.hpp"
#include "hypirb/diffusion/schedule.hpp"

namespace hypirb::harness {

/// Validation failure carrying one "path: message" diagnostic per bad field.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics);
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

struct ScheduleConfig {
  std::size_t T = 200;
  double beta_start = 1e-4;
  double beta_end = 0.04;
  std::string kind = "linear";

  bool operator==(const ScheduleConfig&) const = default;
  diffusion::NoiseSchedule build() const;
};

struct PretrainConfig {
  std::uint64_t seed = 0;
  adversarial::FitOptions diffusion{5000, 128, 1e-3, 0.1};
  adversarial::FitOptions regressor{3000, 128, 1e-3, 0.1};
  /// DAE corruption level; negative selects point_eta * lift (or patch_eta).
  double dae_nu = -1.0;
  adversarial::FitOptions disc{1000, 128, 1e-3, 0.1};
  adversarial::FitOptions ae{1500, 32, 2e-3, 0.1};
  /// Textures: encode observations with a pre-removal encoder.
  bool preremoval = false;
  degradation::PreRemovalOptions preremoval_opts;
};

/// Explicit checkpoint paths; empty entries are built (and cached) on demand.
struct AssetPaths {
  std::string diffusion, mse, dae, disc, ae, preremoval;
  bool operator==(const AssetPaths&) const = default;
};

struct ExperimentConfig {
  std::string name = "run";
  std::string out_dir = "runs/run";
  /// Shared pretrained-asset cache; empty means <out_dir>/assets.
  std::string cache_dir;
  /// Periodic checkpoints every this many steps (0: final only).
  std::size_t checkpoint_every = 0;
  adversarial::DomainConfig domain;
  ScheduleConfig schedule;
  adversarial::TrainConfig train;
  PretrainConfig pretrain;
  AssetPaths assets;
};

nlohmann::json to_json(const adversarial::TrainConfig& c);
nlohmann::json to_json(const adversarial::DomainConfig& c);
nlohmann::json to_json(const ExperimentConfig& c);

/// Strict parsers. Every unknown key, type error and out-of-range value is
/// collected before a ConfigError is thrown; missing keys keep defaults.
adversarial::TrainConfig parse_train_config(const nlohmann::json& j, const std::string& path = "train");
adversarial::DomainConfig parse_domain_config(const nlohmann::json& j, const std::string& path = "domain");
ExperimentConfig parse_experiment(const nlohmann::json& j);

/// Reads a config file, validates it and applies the HYPIRB_SEED override to
/// train.seed. Malformed JSON is reported as a ConfigError.
ExperimentConfig load_experiment(const std::string& path);
/// Applies HYPIRB_SEED (if set) to train.seed.
void apply_seed_override(ExperimentConfig& cfg);
nlohmann::json read_json_file(const std::string& path);

}  // namespace hypirb::harness
