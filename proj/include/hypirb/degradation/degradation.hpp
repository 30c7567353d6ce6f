#pragma once

#include <cstdint>

#include "hypirb/autodiff/tensor.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::degradation {

using ad::Tensor;

/// y = k * x + eps, eps ~ N(0, eta^2 I). For images `kernel` is a normalized
/// [k, k] blur applied per channel with zero padding; for points it is a
/// [d, d] matrix M and y = M x.
struct DegradationSpec {
  enum class Kind { kImage, kPoint };
  Kind kind = Kind::kPoint;
  Tensor kernel;
  double eta = 0.0;

  /// Throws on negative/unnormalized blur kernels, singular point maps or
  /// negative eta.
  void validate() const;
};

Tensor identity_kernel(std::size_t k);
Tensor box_kernel(std::size_t k);
/// Discrete Gaussian sampled on a k x k grid and normalized to unit sum.
Tensor gaussian_kernel(double sigma, std::size_t k);

DegradationSpec image_degradation(Tensor kernel, double eta);
/// gain * I_d.
DegradationSpec point_degradation(std::size_t d, double gain, double eta);

/// x: [N, C, H, W] (image) or [N, d] (point).
Tensor degrade(const Tensor& x, const DegradationSpec& spec, Rng& rng);
Tensor degrade(const Tensor& x, const DegradationSpec& spec, std::uint64_t seed);

/// L1 distance between kernels on a common grid.
double kernel_mismatch(const Tensor& k_deg, const Tensor& k_sigma);

}  // namespace hypirb::degradation
