#include "hypirb/adversarial/baselines.hpp"

#include <stdexcept>

#include "hypirb/adversarial/losses.hpp"
#include "hypirb/autodiff/ops.hpp"
#include "hypirb/degradation/preremoval.hpp"
#include "hypirb/models/adam.hpp"
#include "hypirb/models/networks.hpp"

namespace hypirb::adversarial {

namespace {

using LossFn = std::function<Tensor(Rng&)>;

void fit(models::Model& model, const LossFn& loss_fn, const FitOptions& opt, Rng& rng) {
  model.params.set_requires_grad(true);
  models::Adam adam(model.params, opt.lr);
  for (std::size_t step = 0; step < opt.steps; ++step) {
    const double frac = opt.steps > 1 ? static_cast<double>(step) / static_cast<double>(opt.steps - 1) : 0.0;
    adam.lr = opt.lr * (1.0 - frac * (1.0 - opt.final_lr_frac));
    Tensor loss = loss_fn(rng);
    ad::backward(loss);
    adam.step(model.params);
  }
  model.params.set_requires_grad(false);
}

Tensor regressor_input(const Domain& domain, const Domain::Batch& b, InitMode kind, double dae_nu, Rng& rng) {
  if (kind == InitMode::kMse) return ad::scale(b.y, domain.lift());
  auto xs = b.x.data();
  std::vector<double> v(xs.begin(), xs.end());
  if (dae_nu > 0.0) {
    for (auto& e : v) e += dae_nu * rng.normal();
  }
  return Tensor::from(b.x.shape(), std::move(v));
}

void check_regressor_kind(InitMode kind) {
  if (kind != InitMode::kMse && kind != InitMode::kDae) {
    throw std::invalid_argument("regressor kind must be mse or dae, got " + to_string(kind));
  }
}

}  // namespace

models::Model pretrain_diffusion(const Domain& domain, bool conditioned, const diffusion::NoiseSchedule& sched,
                                 const FitOptions& opt, std::uint64_t seed) {
  Rng rng(seed);
  models::Model m = models::init_model(domain.score_arch(conditioned), rng);
  diffusion::BatchSampler sampler = [&](std::size_t n, Rng& r, Tensor& x0, Tensor& cond) {
    auto b = domain.sample(n, r);
    x0 = b.x;
    if (conditioned) cond = b.cond;
  };
  diffusion::train_dsm(m, sampler, sched, opt, rng);
  return m;
}

models::Model pretrain_regressor(const Domain& domain, InitMode kind, bool conditioned, std::size_t t_star,
                                 double dae_nu, const FitOptions& opt, std::uint64_t seed) {
  check_regressor_kind(kind);
  if (dae_nu < 0.0) throw std::invalid_argument("dae noise level must be >= 0");
  Rng rng(seed);
  models::Model m = models::init_model(domain.score_arch(conditioned), rng);
  fit(m, [&](Rng& r) {
    auto b = domain.sample(opt.batch, r);
    Tensor in = regressor_input(domain, b, kind, dae_nu, r);
    Tensor out = models::score_net_forward(m.arch, m.params, in, {t_star}, conditioned ? &b.cond : nullptr);
    return ad::mse(out, b.x);
  }, opt, rng);
  return m;
}

double regressor_mse(const Domain& domain, const models::Model& net, InitMode kind, std::size_t t_star,
                     double dae_nu, std::size_t n, std::uint64_t seed) {
  check_regressor_kind(kind);
  Rng rng(seed);
  ad::NoGradGuard guard;
  auto b = domain.sample(n, rng);
  Tensor in = regressor_input(domain, b, kind, dae_nu, rng);
  const Tensor* cond = net.arch.cond_dim ? &b.cond : nullptr;
  return ad::mse(models::score_net_forward(net.arch, net.params, in, {t_star}, cond), b.x).item();
}

ClassifierResult pretrain_disc_classifier(const Domain& domain, const FitOptions& opt, std::uint64_t seed,
                                          std::size_t heldout) {
  Rng rng(seed);
  ClassifierResult res{models::init_model(domain.disc_arch(), rng), 0.0};
  models::Model& m = res.model;
  fit(m, [&](Rng& r) {
    auto b = domain.sample(opt.batch, r);
    auto real = models::discriminator_forward(m.arch, m.params, b.x);
    auto fake = models::discriminator_forward(m.arch, m.params, ad::scale(b.y, domain.lift()));
    return discriminator_loss(real.logit, fake.logit);
  }, opt, rng);

  Rng eval_rng(mix_seed(seed, 0x68656c64ULL));
  ad::NoGradGuard guard;
  auto b = domain.sample(heldout, eval_rng);
  const Tensor real = models::discriminator_forward(m.arch, m.params, b.x).logit;
  const Tensor fake = models::discriminator_forward(m.arch, m.params, ad::scale(b.y, domain.lift())).logit;
  std::size_t correct = 0;
  for (double v : real.data()) correct += v > 0.0;
  for (double v : fake.data()) correct += v <= 0.0;
  res.heldout_accuracy = static_cast<double>(correct) / static_cast<double>(2 * heldout);
  return res;
}

models::Model pretrain_domain_autoencoder(const Domain& domain, const FitOptions& opt, std::uint64_t seed) {
  if (!domain.latent()) throw std::logic_error("point domains have no autoencoder");
  Rng rng(seed);
  models::Model ae = models::init_model(domain.ae_arch(), rng);
  degradation::ImageSampler sampler = [&](std::size_t n, Rng& r) {
    return degradation::sample_dataset(domain.dataset(), n, r).x;
  };
  degradation::pretrain_autoencoder(ae, sampler, opt.steps, opt.batch, opt.lr, rng);
  return ae;
}

}  // namespace hypirb::adversarial
