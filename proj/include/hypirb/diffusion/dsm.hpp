#pragma once

#include <functional>
#include <vector>

#include "hypirb/diffusion/gmm.hpp"
#include "hypirb/diffusion/schedule.hpp"
#include "hypirb/models/params.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::diffusion {

/// Noise predictor. Receives the true noise so tests can plug in oracles.
using EpsFn = std::function<Tensor(const Tensor& x_t, const std::vector<std::size_t>& t, const Tensor& noise)>;
/// Score of the time-t marginal at x ([n, ...]).
using ScoreFn = std::function<Tensor(const Tensor& x, std::size_t t)>;

/// Draws t ~ U{0..T-1} and eps ~ N(0, I) per sample; returns
/// mean_n ||eps_hat_n - eps_n||^2 as a [1] tensor.
Tensor dsm_loss(const EpsFn& eps_hat, const Tensor& x0, const NoiseSchedule& sched, Rng& rng);
Tensor dsm_loss(const models::ArchSpec& arch, const models::ParamStore& params, const Tensor& x0,
                const NoiseSchedule& sched, Rng& rng, const Tensor* cond = nullptr);

struct DsmOptions {
  std::size_t steps = 5000;
  std::size_t batch = 128;
  double lr = 1e-3;
  /// Linear decay of the learning rate to lr * final_lr_frac over the run.
  double final_lr_frac = 0.1;
};

/// Produces a clean batch; `cond` is left undefined for unconditioned data.
using BatchSampler = std::function<void(std::size_t n, Rng& rng, Tensor& x0, Tensor& cond)>;

/// Fits a score network in place; returns the per-step losses.
std::vector<double> train_dsm(models::Model& model, const BatchSampler& sampler, const NoiseSchedule& sched,
                              const DsmOptions& opt, Rng& rng);

/// DDPM ancestral sampling from pure noise.
Tensor ancestral_sample(const models::ArchSpec& arch, const models::ParamStore& params, const NoiseSchedule& sched,
                        std::size_t n, std::uint64_t seed, const Tensor* cond = nullptr);

/// x0_hat = (x_t + (1 - ab) s) / sqrt(ab) with s = -eps_hat / sqrt(1 - ab).
/// Differentiable in the parameters.
Tensor one_step_restore(const models::ArchSpec& arch, const models::ParamStore& params, const Tensor& x_t,
                        std::size_t t, const NoiseSchedule& sched, const Tensor* cond = nullptr);

/// Score implied by a noise-prediction network.
ScoreFn network_score(const models::ArchSpec& arch, const models::ParamStore& params, const NoiseSchedule& sched);

/// Root-mean squared score error against the exact score of the corrupted
/// GMM, pooled over the listed times and n samples per time.
double score_error(const ScoreFn& score, const GMMSpec& gmm, const NoiseSchedule& sched,
                   const std::vector<std::size_t>& times, std::size_t n, std::uint64_t seed);

}  // namespace hypirb::diffusion
