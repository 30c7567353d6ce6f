#pragma once

#include <vector>

#include "hypirb/autodiff/tensor.hpp"

// Primitive set of the reverse-mode engine. Shape rules are stated per
// primitive; there is no implicit broadcasting beyond the scalar forms and
// the explicit bias_add.
namespace hypirb::ad {

/// Elementwise; identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

/// s * x for a constant s.
Tensor scale(const Tensor& x, double s);
/// x + c for a constant c.
Tensor add_scalar(const Tensor& x, double c);

/// [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);
/// [m,n] -> [n,m].
Tensor transpose(const Tensor& a);

/// x: [N, C, ...], b: [C] or [N, C]. Adds b over every trailing position.
Tensor bias_add(const Tensor& x, const Tensor& b);

/// Stride-1 cross-correlation with symmetric zero padding ("same" output for
/// odd kernels). x: [N, C, H, W], w: [O, C, kh, kw] -> [N, O, H, W].
Tensor conv2d(const Tensor& x, const Tensor& w);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// log(1 + exp(x)), evaluated without overflow.
Tensor softplus(const Tensor& x);
Tensor exp(const Tensor& x);
/// Domain error on non-positive entries.
Tensor log(const Tensor& x);

/// Full reductions to shape [1].
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean over the last axis: [..., L] -> [...].
Tensor mean_last(const Tensor& x);

/// Same element count, new shape.
Tensor reshape(const Tensor& x, Shape shape);
/// All inputs agree on every axis except `axis`.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);

/// mean((a - b)^2) over all elements; identical shapes.
Tensor mse(const Tensor& a, const Tensor& b);

}  // namespace hypirb::ad
