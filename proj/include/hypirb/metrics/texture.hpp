#pragma once

#include "hypirb/autodiff/tensor.hpp"

namespace hypirb::metrics {

/// Mean |5-point Laplacian| over interior pixels of an [H, W] patch (or of
/// the last two axes of a single-sample tensor such as [1, 1, H, W]).
double texture_richness(const ad::Tensor& patch);
double texture_richness(const double* pixels, std::size_t h, std::size_t w);

/// Per-sample richness of an [N, 1, H, W] batch.
std::vector<double> texture_richness_batch(const ad::Tensor& batch);

}  // namespace hypirb::metrics
