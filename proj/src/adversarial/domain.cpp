#include "hypirb/adversarial/domain.hpp"

#include <cmath>
#include <stdexcept>

#include "hypirb/autodiff/ops.hpp"
#include "hypirb/models/networks.hpp"

namespace hypirb::adversarial {

Domain::Domain(DomainConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kind == "gmm") {
    data_.variant = "gmm";
    data_.gmm = diffusion::ring_gmm(cfg_.modes, cfg_.radius, cfg_.component_std);
    deg_ = degradation::point_degradation(2, cfg_.point_gain, cfg_.point_eta);
  } else if (cfg_.kind == "textures") {
    data_.variant = "textures";
    data_.textures = {cfg_.patch, cfg_.richness_lo, cfg_.richness_hi};
    Tensor k;
    if (cfg_.blur == "gaussian") {
      k = degradation::gaussian_kernel(cfg_.blur_sigma, cfg_.blur_size);
    } else if (cfg_.blur == "box") {
      k = degradation::box_kernel(cfg_.blur_size);
    } else if (cfg_.blur == "identity") {
      k = degradation::identity_kernel(cfg_.blur_size);
    } else {
      throw std::invalid_argument("unknown blur kernel '" + cfg_.blur + "'");
    }
    deg_ = degradation::image_degradation(k, cfg_.patch_eta);
  } else {
    throw std::invalid_argument("unknown domain kind '" + cfg_.kind + "'");
  }
}

void Domain::attach_autoencoder(const models::Model& ae, const std::optional<models::Model>& observation_encoder) {
  if (!latent()) throw std::logic_error("point domains have no autoencoder");
  if (ae.arch != ae_arch()) throw std::invalid_argument("autoencoder descriptor does not match the domain");
  if (observation_encoder && observation_encoder->arch != ae.arch) {
    throw std::invalid_argument("observation encoder descriptor does not match the autoencoder");
  }
  ae_ = ae;
  obs_encoder_ = observation_encoder;
}

double Domain::lift() const { return latent() ? 1.0 : 1.0 / cfg_.point_gain; }

void Domain::sample_image_pairs(std::size_t n, Rng& rng, Tensor& clean, Tensor& degraded,
                                std::vector<double>* richness) const {
  if (!latent()) throw std::logic_error("sample_image_pairs: point domain");
  auto d = degradation::sample_dataset(data_, n, rng);
  clean = d.x;
  degraded = degradation::degrade(d.x, deg_, rng);
  if (richness) *richness = std::move(d.richness);
}

Domain::Batch Domain::sample(std::size_t n, Rng& rng) const {
  Batch b;
  if (!latent()) {
    auto d = degradation::sample_dataset(data_, n, rng);
    b.x = d.x;
    b.labels = std::move(d.labels);
    b.y = degradation::degrade(d.x, deg_, rng);
    return b;
  }
  if (!ae_) throw std::logic_error("texture domain sampled before an autoencoder was attached");
  Tensor degraded;
  sample_image_pairs(n, rng, b.clean_image, degraded, &b.richness);
  ad::NoGradGuard guard;
  b.x = models::ae_encode(ae_->arch, ae_->params, b.clean_image);
  b.y = encode_observation(degraded);
  b.cond = degradation::richness_condition(data_.textures, b.richness);
  return b;
}

Domain::Batch Domain::eval_split(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  return sample(n, rng);
}

Tensor Domain::decode(const Tensor& z) const {
  if (!latent()) return z;
  if (!ae_) throw std::logic_error("decode before an autoencoder was attached");
  ad::NoGradGuard guard;
  return models::ae_decode(ae_->arch, ae_->params, z);
}

Tensor Domain::encode_observation(const Tensor& degraded) const {
  if (!latent()) return degraded;
  if (!ae_) throw std::logic_error("encode before an autoencoder was attached");
  ad::NoGradGuard guard;
  const auto& enc = obs_encoder_ ? *obs_encoder_ : *ae_;
  return models::ae_encode(enc.arch, enc.params, degraded);
}

models::ArchSpec Domain::score_arch(bool conditioned) const {
  models::ArchSpec a;
  a.hidden = cfg_.score_hidden;
  a.depth = cfg_.score_depth;
  a.time_steps = cfg_.time_steps;
  a.cond_dim = conditioned ? 1 : 0;
  if (latent()) {
    a.kind = "score_conv";
    a.channels = 1;
    a.size = cfg_.patch;
  } else {
    a.kind = "score_mlp";
    a.data_dim = 2;
  }
  return a;
}

models::ArchSpec Domain::disc_arch() const {
  models::ArchSpec a;
  a.hidden = cfg_.disc_hidden;
  a.depth = cfg_.disc_depth;
  a.time_dim = 0;
  a.time_steps = 0;
  if (latent()) {
    a.kind = "disc_conv";
    a.channels = 1;
    a.size = cfg_.patch;
  } else {
    a.kind = "disc_mlp";
    a.data_dim = 2;
  }
  return a;
}

models::ArchSpec Domain::ae_arch() const {
  models::ArchSpec a;
  a.kind = "autoencoder";
  a.channels = 1;
  a.size = cfg_.patch;
  a.hidden = cfg_.ae_hidden;
  a.depth = 1;
  a.time_dim = 0;
  a.time_steps = 0;
  return a;
}

metrics::Partition Domain::partition(const Tensor& reference) const {
  if (!latent()) return metrics::Partition::voronoi(data_.gmm.means);
  const std::size_t d = reference.numel() / reference.dim(0);
  Rng rng(0x70617274ULL);
  auto dir = rng.normals(d);
  double norm = 0.0;
  for (double v : dir) norm += v * v;
  for (double& v : dir) v /= std::sqrt(norm);
  return metrics::Partition::projection_quantiles(reference, dir, 8);
}

}  // namespace hypirb::adversarial
