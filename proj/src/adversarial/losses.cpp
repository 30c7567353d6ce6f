#include "hypirb/adversarial/losses.hpp"

#include "hypirb/autodiff/ops.hpp"

namespace hypirb::adversarial {

Tensor discriminator_loss(const Tensor& logit_real, const Tensor& logit_fake) {
  return ad::add(ad::mean(ad::softplus(ad::scale(logit_real, -1.0))), ad::mean(ad::softplus(logit_fake)));
}

Tensor generator_adv_loss(const Tensor& logit_fake) { return ad::mean(ad::softplus(ad::scale(logit_fake, -1.0))); }

GanLosses gan_losses(const Tensor& logit_real, const Tensor& logit_fake, const Tensor& feat_real,
                     const Tensor& feat_fake, const Tensor& fake, const Tensor& real, const LossWeights& w) {
  if (w.adv < 0.0 || w.perc < 0.0 || w.mse < 0.0) throw std::invalid_argument("loss weights must be >= 0");
  GanLosses out;
  out.loss_d = discriminator_loss(logit_real, logit_fake);
  out.adv = generator_adv_loss(logit_fake);
  out.perc = ad::mse(feat_fake, feat_real);
  out.mse = ad::mse(fake, real);
  out.loss_g = ad::add(ad::add(ad::scale(out.adv, w.adv), ad::scale(out.perc, w.perc)), ad::scale(out.mse, w.mse));
  return out;
}

}  // namespace hypirb::adversarial
