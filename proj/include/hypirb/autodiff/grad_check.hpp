#pragma once

#include <functional>

#include "hypirb/autodiff/tensor.hpp"

namespace hypirb::ad {

using ScalarFn = std::function<Tensor(const Tensor&)>;

/// Compares the reverse-mode gradient of f at x with central differences of
/// step h. Returns max_i |g_i - fd_i| / max(1, |g_i|).
double grad_check(const ScalarFn& f, const Tensor& x, double h = 1e-5);

}  // namespace hypirb::ad
