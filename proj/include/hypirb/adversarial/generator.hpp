#pragma once

#include <optional>
#include <string>

#include "hypirb/diffusion/schedule.hpp"
#include "hypirb/models/lora.hpp"
#include "hypirb/models/params.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::adversarial {

using ad::Tensor;

enum class InitMode { kDiffusion, kMse, kDae, kScratch };

std::string to_string(InitMode m);
InitMode parse_init_mode(const std::string& s);

/// Pretrained networks a generator may start from. All share the score
/// descriptor.
struct GeneratorAssets {
  std::optional<models::Model> diffusion;
  std::optional<models::Model> mse;
  std::optional<models::Model> dae;
};

struct GeneratorOptions {
  InitMode mode = InitMode::kDiffusion;
  std::size_t t_star = 0;   // injection time
  double lift = 1.0;        // maps y to the scale of x
  std::size_t lora_rank = 8;
  double lora_alpha = 8.0;
  bool texture_cond = false;
};

/// Restoration network R(y). The base weights are frozen; only the LoRA
/// factors and, with texture conditioning, the conditioning input row are
/// trainable.
///
/// diffusion: R(y) = one-step restore of x_t = sqrt(ab(t*)) * lift * y at t*.
/// mse / dae / scratch: R(y) = U(lift * y, t*).
struct Generator {
  models::ArchSpec arch;
  models::ParamStore base;
  models::LoRAAdapter lora;
  GeneratorOptions opt;
  diffusion::NoiseSchedule sched;

  /// Fresh store of the trainable tensors (aliases, not copies).
  models::ParamStore trainable() const;
  /// Effective weights given a trainable store.
  models::ParamStore effective(const models::ParamStore& trainable) const;
  Tensor forward(const models::ParamStore& trainable, const Tensor& y, const Tensor* cond = nullptr) const;
  Tensor forward(const Tensor& y, const Tensor* cond = nullptr) const { return forward(trainable(), y, cond); }
};

/// Builds a generator. Non-scratch modes need the matching asset with the
/// expected descriptor; scratch draws weights from rng. The LoRA factors are
/// always drawn from rng after the base weights.
Generator init_generator(const GeneratorOptions& opt, const models::ArchSpec& arch, const GeneratorAssets& assets,
                         const diffusion::NoiseSchedule& sched, Rng& rng);

/// Name of the conditioning row that stays trainable.
inline const char* kCondRow = "in.wc";

}  // namespace hypirb::adversarial
