#include "hypirb/diffusion/dsm.hpp"

#include <cmath>

#include "hypirb/autodiff/ops.hpp"
#include "hypirb/models/adam.hpp"
#include "hypirb/models/networks.hpp"

namespace hypirb::diffusion {

Tensor dsm_loss(const EpsFn& eps_hat, const Tensor& x0, const NoiseSchedule& sched, Rng& rng) {
  if (x0.rank() < 2) throw ad::ShapeError("dsm_loss: batch must be [N, ...], got " + ad::shape_str(x0.shape()));
  const std::size_t n = x0.dim(0);
  const std::size_t per = x0.numel() / n;
  std::vector<std::size_t> t(n);
  for (auto& v : t) v = rng.index(sched.T);
  Tensor noise = Tensor::from(x0.shape(), rng.normals(x0.numel()));
  auto xs = x0.data();
  auto es = noise.data();
  std::vector<double> xt(xs.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::sqrt(sched.alpha_bar[t[i]]);
    const double b = std::sqrt(1.0 - sched.alpha_bar[t[i]]);
    for (std::size_t j = 0; j < per; ++j) xt[i * per + j] = a * xs[i * per + j] + b * es[i * per + j];
  }
  Tensor pred = eps_hat(Tensor::from(x0.shape(), std::move(xt)), t, noise);
  return ad::scale(ad::mse(pred, noise), static_cast<double>(per));
}

Tensor dsm_loss(const models::ArchSpec& arch, const models::ParamStore& params, const Tensor& x0,
                const NoiseSchedule& sched, Rng& rng, const Tensor* cond) {
  return dsm_loss(
      [&](const Tensor& x_t, const std::vector<std::size_t>& t, const Tensor&) {
        return models::score_net_forward(arch, params, x_t, t, cond);
      },
      x0, sched, rng);
}

std::vector<double> train_dsm(models::Model& model, const BatchSampler& sampler, const NoiseSchedule& sched,
                              const DsmOptions& opt, Rng& rng) {
  if (sched.T != model.arch.time_steps) {
    throw std::invalid_argument("train_dsm: schedule has " + std::to_string(sched.T) + " steps, network expects " +
                                std::to_string(model.arch.time_steps));
  }
  model.params.set_requires_grad(true);
  models::Adam adam(model.params, opt.lr);
  std::vector<double> losses;
  losses.reserve(opt.steps);
  for (std::size_t step = 0; step < opt.steps; ++step) {
    const double frac = opt.steps > 1 ? static_cast<double>(step) / static_cast<double>(opt.steps - 1) : 0.0;
    adam.lr = opt.lr * (1.0 - frac * (1.0 - opt.final_lr_frac));
    Tensor x0, cond;
    sampler(opt.batch, rng, x0, cond);
    Tensor loss = dsm_loss(model.arch, model.params, x0, sched, rng, cond.defined() ? &cond : nullptr);
    ad::backward(loss);
    adam.step(model.params);
    losses.push_back(loss.item());
  }
  model.params.set_requires_grad(false);
  return losses;
}

Tensor ancestral_sample(const models::ArchSpec& arch, const models::ParamStore& params, const NoiseSchedule& sched,
                        std::size_t n, std::uint64_t seed, const Tensor* cond) {
  ad::NoGradGuard guard;
  Rng rng(seed);
  ad::Shape shape{n};
  for (auto d : arch.sample_shape()) shape.push_back(d);
  Tensor x = Tensor::from(shape, rng.normals(ad::shape_numel(shape)));
  for (std::size_t step = sched.T; step-- > 0;) {
    Tensor eps = models::score_net_forward(arch, params, x, {step}, cond);
    const double beta = sched.beta[step];
    const double coef = beta / std::sqrt(1.0 - sched.alpha_bar[step]);
    const double inv = 1.0 / std::sqrt(1.0 - beta);
    auto xs = x.data();
    auto es = eps.data();
    std::vector<double> next(xs.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = inv * (xs[i] - coef * es[i]);
      if (step > 0) next[i] += std::sqrt(beta) * rng.normal();
    }
    x = Tensor::from(shape, std::move(next));
  }
  return x;
}

Tensor one_step_restore(const models::ArchSpec& arch, const models::ParamStore& params, const Tensor& x_t,
                        std::size_t t, const NoiseSchedule& sched, const Tensor* cond) {
  const double ab = sched.ab(t);
  Tensor eps = models::score_net_forward(arch, params, x_t, {t}, cond);
  // (1 - ab) * s = -sqrt(1 - ab) * eps_hat; written this way it stays finite at ab = 1.
  Tensor shifted = ad::sub(x_t, ad::scale(eps, std::sqrt(1.0 - ab)));
  return ad::scale(shifted, 1.0 / std::sqrt(ab));
}

ScoreFn network_score(const models::ArchSpec& arch, const models::ParamStore& params, const NoiseSchedule& sched) {
  return [&arch, &params, &sched](const Tensor& x, std::size_t t) {
    ad::NoGradGuard guard;
    return score_from_eps(models::score_net_forward(arch, params, x, {t}), sched.ab(t));
  };
}

double score_error(const ScoreFn& score, const GMMSpec& gmm, const NoiseSchedule& sched,
                   const std::vector<std::size_t>& times, std::size_t n, std::uint64_t seed) {
  if (times.empty()) throw std::invalid_argument("score_error: empty time set");
  Rng rng(seed);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t : times) {
    const double ab = sched.ab(t);
    Tensor x0 = sample_gmm(gmm, n, rng);
    Tensor noise = Tensor::from(x0.shape(), rng.normals(x0.numel()));
    Tensor x_t;
    {
      ad::NoGradGuard guard;
      x_t = corrupt_at(x0, ab, noise);
    }
    Tensor got = score(x_t, t);
    Tensor want = analytic_gmm_score_vp(gmm, ab, x_t);
    auto g = got.data();
    auto w = want.data();
    if (g.size() != w.size()) throw ad::ShapeError("score_error: score output shape mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) total += (g[i] - w[i]) * (g[i] - w[i]);
    count += n;
  }
  return std::sqrt(total / static_cast<double>(count));
}

}  // namespace hypirb::diffusion
