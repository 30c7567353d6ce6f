#pragma once

#include <vector>

#include "hypirb/autodiff/tensor.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::diffusion {

using ad::Tensor;

/// Isotropic Gaussian mixture with a shared component variance.
struct GMMSpec {
  std::vector<std::vector<double>> means;
  double variance = 1.0;
  std::vector<double> weights;

  std::size_t dim() const { return means.empty() ? 0 : means[0].size(); }
  std::size_t components() const { return means.size(); }
  /// Throws std::invalid_argument on empty/ragged means, non-positive
  /// variance or weights off the simplex.
  void validate() const;
};

/// K equal-weight components on a circle of radius R in the plane.
GMMSpec ring_gmm(std::size_t k, double radius, double component_std);
/// Single N(0, I_d) component.
GMMSpec standard_normal_gmm(std::size_t d);

/// n samples as [n, d]; `labels` (optional) receives the component index.
Tensor sample_gmm(const GMMSpec& gmm, std::size_t n, Rng& rng, std::vector<std::size_t>* labels = nullptr);

/// grad log (p * N(0, sigma^2 I)) at each row of x ([n, d]).
Tensor analytic_gmm_score(const GMMSpec& gmm, double sigma, const Tensor& x);

/// Score of the law of sqrt(ab) x0 + sqrt(1-ab) eps for x0 ~ gmm.
Tensor analytic_gmm_score_vp(const GMMSpec& gmm, double alpha_bar, const Tensor& x);

/// Posterior mean E[x0 | x_t] under the same corruption, [n, d].
Tensor gmm_posterior_mean(const GMMSpec& gmm, double alpha_bar, const Tensor& x_t);

}  // namespace hypirb::diffusion
