#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypirb/diffusion/gmm.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::degradation {

using ad::Tensor;

/// Procedural grayscale textures: a smooth field plus oriented high-frequency
/// gratings, rescaled so each patch hits its drawn richness exactly.
struct TextureSpec {
  std::size_t size = 16;
  double richness_lo = 0.3;
  double richness_hi = 1.2;

  /// (c - mean) / std of the uniform richness law; 0 for a degenerate range.
  double standardize(double richness) const;
  /// Inverse of standardize (lo for a degenerate range).
  double unstandardize(double tau) const;
};

struct DatasetSpec {
  std::string variant = "gmm";  // gmm | textures
  diffusion::GMMSpec gmm = diffusion::ring_gmm(8, 2.0, 0.05);
  TextureSpec textures;
};

struct Dataset {
  Tensor x;                          // [n, d] or [n, 1, S, S]
  std::vector<double> richness;      // textures only
  std::vector<std::size_t> labels;   // gmm component of each sample
};

Dataset gen_dataset(const DatasetSpec& spec, std::size_t n, std::uint64_t seed);
Dataset sample_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng);

/// One texture patch with the requested richness, written to out[size*size].
void render_texture(const TextureSpec& spec, double richness, Rng& rng, double* out);

/// [n, 1] tensor of standardized richness values.
Tensor richness_condition(const TextureSpec& spec, const std::vector<double>& richness);

}  // namespace hypirb::degradation
