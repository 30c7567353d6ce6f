#pragma once

#include <map>
#include <optional>
#include <string>

#include "hypirb/adversarial/domain.hpp"
#include "hypirb/adversarial/generator.hpp"
#include "hypirb/diffusion/schedule.hpp"
#include "hypirb/harness/config.hpp"

namespace hypirb::harness {

class LockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exclusive claim on an output directory via an O_EXCL lock file.
class RunLock {
 public:
  explicit RunLock(const std::string& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

/// Asset kinds: "ae", "preremoval", "diffusion", "mse", "dae", "disc".
/// Cache file for a kind under the config's cache directory; the name hashes
/// every setting the asset depends on.
std::string cached_asset_path(const ExperimentConfig& cfg, const std::string& kind);

/// Loads the asset from an explicit path, the cache, or trains and caches it.
/// The explicit path from the config if set, else the cache location.
std::string asset_path(const ExperimentConfig& cfg, const std::string& kind);
models::Model ensure_asset(const ExperimentConfig& cfg, const std::string& kind);

/// Domain with its autoencoder (and pre-removal encoder) attached.
adversarial::Domain make_domain(const ExperimentConfig& cfg);

struct Prepared {
  adversarial::Domain domain;
  diffusion::NoiseSchedule sched;
  adversarial::GeneratorAssets assets;
  std::optional<models::Model> disc;
};

/// Everything the configured training run needs, and nothing else.
Prepared prepare(const ExperimentConfig& cfg);

/// Injection time for the config.
std::size_t injection_time(const ExperimentConfig& cfg);

struct RunResult {
  std::string checkpoint;  // last written checkpoint
  std::size_t step = 0;
  bool finished = false;
  bool stopped_early = false;
};

/// One training run into cfg.out_dir: config.json, metrics.jsonl and
/// checkpoints (last.ckpt always; final.ckpt once cfg.train.steps is reached).
/// `resume_from` continues a run from its checkpoint, appending to the log.
RunResult run_experiment(const ExperimentConfig& cfg, const std::optional<std::string>& resume_from = std::nullopt,
                         std::size_t stop_at = 0);

/// Config stored in a run checkpoint.
ExperimentConfig checkpoint_experiment(const Checkpoint& ckpt);

}  // namespace hypirb::harness
