#pragma once

#include "hypirb/models/params.hpp"

namespace hypirb::models {

/// Adaptive-moment optimizer over a fixed parameter set. Moments live in
/// ParamStores so they serialize alongside the weights.
class Adam {
 public:
  Adam() = default;
  Adam(const ParamStore& params, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Updates every parameter in `params` in place using its gradient; params
  /// without a gradient count as zero-gradient. Clears gradients afterwards.
  void step(ParamStore& params);

  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  ParamStore m;
  ParamStore v;
};

}  // namespace hypirb::models
