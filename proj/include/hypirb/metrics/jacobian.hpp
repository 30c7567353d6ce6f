#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hypirb/models/params.hpp"

namespace hypirb::metrics {

/// Global L2 norm of the gradients of every tensor in the store. Throws if a
/// tensor has no gradient.
double grad_norm(const models::ParamStore& params);
/// sqrt(sum of squares) of per-block norms.
double combine_norms(const std::vector<double>& block_norms);

/// Generator as a function of its trainable parameters.
using GeneratorFn = std::function<ad::Tensor(const models::ParamStore& params, const ad::Tensor& y)>;

struct JacobianEstimate {
  double norm = 0.0;  // max over samples of the full parameter-Jacobian spectral norm
  std::vector<std::pair<std::string, double>> per_block;  // same, restricted to one tensor
  bool converged = true;
};

/// Power iteration on J^T J per sample of y ([n, ...]). J v uses a central
/// finite difference of step h; J^T u uses the reverse pass.
JacobianEstimate jacobian_norm_estimate(const GeneratorFn& gen, const models::ParamStore& params, const ad::Tensor& y,
                                        std::size_t iterations = 20, std::uint64_t seed = 0, double h = 1e-6);

}  // namespace hypirb::metrics
