#pragma once

#include "hypirb/autodiff/tensor.hpp"

namespace hypirb::adversarial {

using ad::Tensor;

struct LossWeights {
  double adv = 0.5;
  double perc = 5.0;
  double mse = 1.0;
  bool operator==(const LossWeights&) const = default;
};

/// mean softplus(-real) + mean softplus(fake), i.e.
/// -[E log D(x) + E log(1 - D(R(y)))] with D = sigmoid(logit).
Tensor discriminator_loss(const Tensor& logit_real, const Tensor& logit_fake);
/// Non-saturating -E log D(R(y)) = mean softplus(-fake).
Tensor generator_adv_loss(const Tensor& logit_fake);

struct GanLosses {
  Tensor loss_d;
  Tensor loss_g;
  Tensor adv;
  Tensor perc;  // squared distance of discriminator features
  Tensor mse;
};

/// Combines the pieces. Feature tensors are [N, F]; fake/real are outputs
/// and targets of identical shape. loss_d treats its inputs as given; pass
/// detached fake logits to keep the generator out of the D update.
GanLosses gan_losses(const Tensor& logit_real, const Tensor& logit_fake, const Tensor& feat_real,
                     const Tensor& feat_fake, const Tensor& fake, const Tensor& real, const LossWeights& w);

}  // namespace hypirb::adversarial
