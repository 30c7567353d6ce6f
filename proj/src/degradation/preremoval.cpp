#include "hypirb/degradation/preremoval.hpp"

#include <cmath>
#include <stdexcept>

#include "hypirb/autodiff/ops.hpp"
#include "hypirb/models/adam.hpp"
#include "hypirb/models/networks.hpp"

namespace hypirb::degradation {

namespace {

bool is_encoder(const std::string& name) { return name.rfind("enc.", 0) == 0; }

}  // namespace

double reconstruction_error(const models::Model& ae, const Tensor& x) {
  ad::NoGradGuard guard;
  return ad::mse(models::autoencoder_forward(ae.arch, ae.params, x).recon, x).item();
}

double latent_distance(const models::Model& ae, const Tensor& clean, const Tensor& degraded) {
  ad::NoGradGuard guard;
  Tensor a = models::ae_encode(ae.arch, ae.params, clean);
  Tensor b = models::ae_encode(ae.arch, ae.params, degraded);
  const std::size_t n = clean.dim(0);
  const std::size_t per = clean.numel() / n;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < per; ++j) {
      const double d = a.at(i * per + j) - b.at(i * per + j);
      s += d * d;
    }
    total += std::sqrt(s);
  }
  return total / static_cast<double>(n);
}

std::vector<double> pretrain_autoencoder(models::Model& ae, const ImageSampler& sampler, std::size_t steps,
                                         std::size_t batch, double lr, Rng& rng) {
  ae.params.set_requires_grad(true);
  models::Adam adam(ae.params, lr);
  std::vector<double> losses;
  for (std::size_t s = 0; s < steps; ++s) {
    Tensor x = sampler(batch, rng);
    Tensor loss = ad::mse(models::autoencoder_forward(ae.arch, ae.params, x).recon, x);
    ad::backward(loss);
    adam.step(ae.params);
    losses.push_back(loss.item());
  }
  ae.params.set_requires_grad(false);
  return losses;
}

std::string to_string(PreRemovalTarget t) {
  switch (t) {
    case PreRemovalTarget::kShared: return "shared";
    case PreRemovalTarget::kAnchored: return "anchored";
  }
  throw std::invalid_argument("unknown pre-removal target");
}

PreRemovalTarget parse_preremoval_target(const std::string& s) {
  if (s == "shared") return PreRemovalTarget::kShared;
  if (s == "anchored") return PreRemovalTarget::kAnchored;
  throw std::invalid_argument("unknown pre-removal target '" + s + "'");
}

models::Model fit_preremoval_encoder(const models::Model& ae, const PairSampler& pairs,
                                     const PreRemovalOptions& opt, Rng& rng) {
  if (ae.arch.kind != "autoencoder") throw std::invalid_argument("fit_preremoval_encoder: not an autoencoder");
  {
    Rng probe = rng.fork(0x7265636f6eULL);
    Tensor clean, deg;
    pairs(opt.check_samples, probe, clean, deg);
    const double err = reconstruction_error(ae, clean);
    if (!(err <= opt.max_recon_error)) {
      throw std::invalid_argument("fit_preremoval_encoder: autoencoder reconstruction error " + std::to_string(err) +
                                  " exceeds " + std::to_string(opt.max_recon_error) + "; pretrain it first");
    }
  }

  models::Model fitted{ae.arch, ae.params.clone(false)};
  const models::ParamStore frozen = ae.params;
  models::ParamStore enc;
  for (const auto& name : fitted.params.names()) {
    if (is_encoder(name)) enc.add(name, fitted.params.at(name));
  }
  enc.set_requires_grad(true);
  models::Adam adam(enc, opt.lr);

  for (std::size_t s = 0; s < opt.steps; ++s) {
    Tensor clean, deg;
    pairs(opt.batch, rng, clean, deg);
    Tensor target;
    if (opt.target == PreRemovalTarget::kShared) {
      // Minimized by collapsing both branches to one latent as well.
      target = models::ae_decode(fitted.arch, fitted.params, models::ae_encode(fitted.arch, fitted.params, clean));
    } else {
      ad::NoGradGuard guard;
      target = models::ae_decode(ae.arch, frozen, models::ae_encode(ae.arch, frozen, clean));
    }
    Tensor out = models::ae_decode(fitted.arch, fitted.params, models::ae_encode(fitted.arch, fitted.params, deg));
    Tensor loss = ad::mse(out, target);
    if (!std::isfinite(loss.item())) throw std::runtime_error("fit_preremoval_encoder: non-finite loss");
    if (loss.requires_grad()) ad::backward(loss);
    adam.step(enc);
  }
  enc.set_requires_grad(false);
  return fitted;
}

}  // namespace hypirb::degradation
