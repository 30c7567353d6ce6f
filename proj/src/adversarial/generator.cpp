#include "hypirb/adversarial/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "hypirb/autodiff/ops.hpp"
#include "hypirb/diffusion/dsm.hpp"
#include "hypirb/models/networks.hpp"

namespace hypirb::adversarial {

std::string to_string(InitMode m) {
  switch (m) {
    case InitMode::kDiffusion: return "diffusion";
    case InitMode::kMse: return "mse";
    case InitMode::kDae: return "dae";
    case InitMode::kScratch: return "scratch";
  }
  return "?";
}

InitMode parse_init_mode(const std::string& s) {
  if (s == "diffusion") return InitMode::kDiffusion;
  if (s == "mse") return InitMode::kMse;
  if (s == "dae") return InitMode::kDae;
  if (s == "scratch") return InitMode::kScratch;
  throw std::invalid_argument("unknown init_mode '" + s + "'");
}

models::ParamStore Generator::trainable() const {
  models::ParamStore t = lora.as_params();
  if (opt.texture_cond && base.contains(kCondRow)) t.add(kCondRow, base.at(kCondRow));
  return t;
}

models::ParamStore Generator::effective(const models::ParamStore& trainable) const {
  models::ParamStore merged;
  for (const auto& name : base.names()) {
    merged.add(name, trainable.contains(name) ? trainable.at(name) : base.at(name));
  }
  models::LoRAAdapter bound = lora;
  bound.bind(trainable);
  return models::lora_effective(merged, bound);
}

Tensor Generator::forward(const models::ParamStore& trainable, const Tensor& y, const Tensor* cond) const {
  const models::ParamStore eff = effective(trainable);
  const Tensor* c = opt.texture_cond ? cond : nullptr;
  if (opt.mode == InitMode::kDiffusion) {
    const double s = std::sqrt(sched.ab(opt.t_star)) * opt.lift;
    return diffusion::one_step_restore(arch, eff, ad::scale(y, s), opt.t_star, sched, c);
  }
  return models::score_net_forward(arch, eff, ad::scale(y, opt.lift), {opt.t_star}, c);
}

Generator init_generator(const GeneratorOptions& opt, const models::ArchSpec& arch, const GeneratorAssets& assets,
                         const diffusion::NoiseSchedule& sched, Rng& rng) {
  if (opt.t_star >= sched.T) throw std::out_of_range("injection time outside the schedule");
  if (opt.texture_cond && arch.cond_dim == 0) {
    throw std::invalid_argument("texture conditioning requested but the descriptor has no conditioning input");
  }
  Generator g;
  g.arch = arch;
  g.opt = opt;
  g.sched = sched;
  auto take = [&](const std::optional<models::Model>& asset, const char* what) {
    if (!asset) throw std::invalid_argument(std::string("init_generator: missing ") + what + " checkpoint");
    if (asset->arch != arch) {
      throw std::invalid_argument(std::string("init_generator: ") + what +
                                  " checkpoint has a different architecture descriptor");
    }
    return asset->params.clone(false);
  };
  switch (opt.mode) {
    case InitMode::kDiffusion: g.base = take(assets.diffusion, "diffusion"); break;
    case InitMode::kMse: g.base = take(assets.mse, "mse"); break;
    case InitMode::kDae: g.base = take(assets.dae, "dae"); break;
    case InitMode::kScratch: g.base = models::init_model(arch, rng).params; break;
  }
  g.lora = models::make_lora(g.base, opt.lora_rank, opt.lora_alpha, rng);
  return g;
}

}  // namespace hypirb::adversarial
