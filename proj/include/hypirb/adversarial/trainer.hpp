#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hypirb/adversarial/domain.hpp"
#include "hypirb/adversarial/generator.hpp"
#include "hypirb/adversarial/losses.hpp"
#include "hypirb/harness/checkpoint.hpp"
#include "hypirb/harness/metrics_log.hpp"
#include "hypirb/models/adam.hpp"
#include "hypirb/models/ema.hpp"

namespace hypirb::adversarial {

struct TrainConfig {
  InitMode init_mode = InitMode::kDiffusion;
  std::string disc_init = "scratch";  // scratch | pretrained
  std::size_t lora_rank = 8;
  double lora_alpha = 8.0;
  LossWeights weights;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  std::size_t batch = 64;
  std::size_t steps = 3000;
  /// Upper end of the per-batch observation noise level rho ~ U[0, max].
  double inject_noise = 0.0;
  bool texture_cond = false;
  std::uint64_t seed = 0;
  std::size_t eval_every = 25;
  std::size_t eval_n = 512;
  std::uint64_t eval_seed = 0x6576616cULL;
  /// Injection time chosen as the first t with alpha_bar(t) <= this.
  double inject_alpha_bar = 0.5;
  double ema_decay = 0.999;
  /// Stop at the first eval with w2 <= this (0 disables).
  double early_stop_w2 = 0.0;
  // Off by default: wall time is the one field that differs between reruns.
  bool log_wall_time = false;

  bool operator==(const TrainConfig&) const = default;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunState {
  Generator gen;
  models::ParamStore trainable;
  models::Model disc;
  models::EMAState ema;
  models::Adam opt_g;
  models::Adam opt_d;
  std::size_t step = 0;
  Rng rng;
};

/// Alternating adversarial fine-tuning: one discriminator step then one
/// generator step per iteration.
class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const Domain& domain, const diffusion::NoiseSchedule& sched,
          const GeneratorAssets& assets, const std::optional<models::Model>& disc_pretrained = std::nullopt);

  /// Restores every piece of run state saved by checkpoint().
  static Trainer resume(const harness::Checkpoint& ckpt, const TrainConfig& cfg, const Domain& domain,
                        const diffusion::NoiseSchedule& sched);

  using Sink = std::function<void(const harness::MetricsRecord&)>;

  /// Trains until cfg.steps (or early stop), emitting a record per step plus a
  /// step-0 evaluation record for fresh runs. `stop_at` (if nonzero) pauses
  /// after that step so a run can be split across processes.
  void run(const Sink& sink, std::size_t stop_at = 0);
  harness::MetricsRecord train_step();
  /// W2 / mode gap / TV of the current generator on the eval split.
  void evaluate(harness::MetricsRecord& rec) const;

  harness::Checkpoint checkpoint() const;

  const RunState& state() const { return state_; }
  RunState& state() { return state_; }
  const TrainConfig& config() const { return cfg_; }
  const Domain& domain() const { return domain_; }
  bool stopped_early() const { return stopped_early_; }
  /// Generator outputs on the eval split.
  Tensor eval_outputs() const;
  const Domain::Batch& eval_batch() const { return eval_; }

 private:
  Trainer(const TrainConfig& cfg, const Domain& domain);
  void prepare_eval();

  TrainConfig cfg_;
  Domain domain_;
  RunState state_;
  Domain::Batch eval_;
  std::optional<metrics::Partition> partition_;
  bool stopped_early_ = false;
  std::chrono::steady_clock::time_point start_;
};

/// Generator output under test-time controls: R(y + rho * zeta, cond = tau)
/// with zeta ~ N(0, I) drawn from `seed`. rho = 0 adds nothing.
struct RestoreControls {
  double rho = 0.0;
  std::optional<double> tau;
  std::uint64_t seed = 0;
};
Tensor restore(const Generator& gen, const models::ParamStore& trainable, const Tensor& y,
               const RestoreControls& controls);

}  // namespace hypirb::adversarial
