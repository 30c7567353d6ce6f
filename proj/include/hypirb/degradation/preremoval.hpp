#pragma once

#include <functional>
#include <string>

#include "hypirb/models/params.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::degradation {

using ad::Tensor;

/// Produces paired clean/degraded images of one batch.
using PairSampler = std::function<void(std::size_t n, Rng& rng, Tensor& clean, Tensor& degraded)>;
/// Produces clean images.
using ImageSampler = std::function<Tensor(std::size_t n, Rng& rng)>;

/// Which encoder encodes the clean branch of the pre-removal loss.
enum class PreRemovalTarget {
  kShared,    // both branches through the encoder being fitted
  kAnchored,  // clean branch through the frozen pretrained encoder
};

std::string to_string(PreRemovalTarget t);
/// "shared" | "anchored".
PreRemovalTarget parse_preremoval_target(const std::string& s);

struct PreRemovalOptions {
  std::size_t steps = 400;
  std::size_t batch = 32;
  double lr = 1e-3;
  PreRemovalTarget target = PreRemovalTarget::kAnchored;
  /// Largest clean reconstruction MSE accepted as "pretrained".
  double max_recon_error = 0.01;
  std::size_t check_samples = 128;
};

/// mean ||decode(encode(x)) - x||^2 / dim.
double reconstruction_error(const models::Model& ae, const Tensor& x);
/// Mean over samples of ||encode(deg) - encode(clean)||.
double latent_distance(const models::Model& ae, const Tensor& clean, const Tensor& degraded);

/// Fits the autoencoder to clean images in place; returns the per-step losses.
std::vector<double> pretrain_autoencoder(models::Model& ae, const ImageSampler& sampler, std::size_t steps,
                                         std::size_t batch, double lr, Rng& rng);

/// Fine-tunes the encoder weights of `ae` so decoded latents of degraded
/// inputs match those of their clean counterparts. The decoder is left
/// untouched. Throws if the AE fails the reconstruction check.
models::Model fit_preremoval_encoder(const models::Model& ae, const PairSampler& pairs,
                                     const PreRemovalOptions& opt, Rng& rng);

}  // namespace hypirb::degradation
