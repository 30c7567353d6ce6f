#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypirb/degradation/datasets.hpp"
#include "hypirb/degradation/degradation.hpp"
#include "hypirb/metrics/distribution.hpp"
#include "hypirb/models/params.hpp"

namespace hypirb::adversarial {

using ad::Tensor;

struct DomainConfig {
  std::string kind = "gmm";  // gmm | textures
  // gmm
  std::size_t modes = 8;
  double radius = 2.0;
  double component_std = 0.05;
  double point_gain = 0.5;
  double point_eta = 0.05;
  // textures
  std::size_t patch = 16;
  double richness_lo = 0.3;
  double richness_hi = 1.2;
  std::string blur = "gaussian";  // gaussian | box | identity
  double blur_sigma = 1.0;
  std::size_t blur_size = 5;
  double patch_eta = 0.1;
  // network widths
  std::size_t score_hidden = 128;
  std::size_t score_depth = 3;
  std::size_t disc_hidden = 128;
  std::size_t disc_depth = 2;
  std::size_t ae_hidden = 8;
  std::size_t time_steps = 200;

  bool operator==(const DomainConfig&) const = default;

  /// Narrower conv networks for the texture domain; one CPU core cannot
  /// afford 128-channel convolutions on 16x16 patches.
  void use_texture_widths() {
    score_hidden = 16;
    score_depth = 2;
    disc_hidden = 16;
  }
};

/// One toy restoration problem: how clean targets x and observations y are
/// drawn, in the space the generator works in (points, or AE latents).
class Domain {
 public:
  explicit Domain(DomainConfig cfg);

  struct Batch {
    Tensor x;                        // clean target in generator space
    Tensor y;                        // observation in generator space
    Tensor cond;                     // [n,1] standardized richness (textures)
    Tensor clean_image;              // textures only
    std::vector<double> richness;    // textures only
    std::vector<std::size_t> labels; // gmm only
  };

  /// Latent domains need the frozen autoencoder; `observation_encoder` (if
  /// given) replaces its encoder for the degraded branch only.
  void attach_autoencoder(const models::Model& ae, const std::optional<models::Model>& observation_encoder);
  bool latent() const { return cfg_.kind == "textures"; }
  bool has_autoencoder() const { return ae_.has_value(); }

  Batch sample(std::size_t n, Rng& rng) const;
  Batch eval_split(std::size_t n, std::uint64_t seed) const;

  /// Decoded image for latent domains; identity otherwise.
  Tensor decode(const Tensor& z) const;
  /// Observation in generator space: degraded images go through the
  /// observation encoder; points pass through.
  Tensor encode_observation(const Tensor& degraded) const;

  /// Factor mapping y back to the scale of x (1 / point_gain for points).
  double lift() const;

  models::ArchSpec score_arch(bool conditioned) const;
  models::ArchSpec disc_arch() const;
  models::ArchSpec ae_arch() const;

  /// Voronoi cells of the mixture means (gmm) or 8 projection-quantile cells
  /// fitted to `reference` (textures).
  metrics::Partition partition(const Tensor& reference) const;

  const DomainConfig& config() const { return cfg_; }
  const degradation::DatasetSpec& dataset() const { return data_; }
  const degradation::DegradationSpec& degradation() const { return deg_; }

  /// Clean images paired with their degraded versions (textures).
  void sample_image_pairs(std::size_t n, Rng& rng, Tensor& clean, Tensor& degraded,
                          std::vector<double>* richness = nullptr) const;

 private:
  DomainConfig cfg_;
  degradation::DatasetSpec data_;
  degradation::DegradationSpec deg_;
  std::optional<models::Model> ae_;
  std::optional<models::Model> obs_encoder_;
};

}  // namespace hypirb::adversarial
