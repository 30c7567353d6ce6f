#pragma once

#include <string>
#include <vector>

#include "hypirb/models/params.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::models {

/// Low-rank factors for a set of base weights. A weight of shape [p, ...] is
/// viewed as a p x q matrix (q = product of the trailing dims); its update is
/// (alpha / r) * A * B with A: [p, r], B: [r, q].
struct LoRAAdapter {
  struct Factor {
    std::string target;
    std::size_t rank = 0;
    Tensor a;
    Tensor b;
  };
  double alpha = 1.0;
  std::vector<Factor> factors;

  /// Parameter names "lora.<target>.a" / "lora.<target>.b".
  ParamStore as_params() const;
  /// Rebinds factor tensors from a store produced by as_params().
  void bind(const ParamStore& store);
};

/// Matrix view of a weight: rows = leading dim, cols = the rest.
std::pair<std::size_t, std::size_t> matrix_dims(const ad::Shape& shape);

/// Adapter over every base tensor whose name ends in ".w" or ".wt", with
/// rank min(rank, rows, cols) per target. A ~ N(0, 1/rows), B = 0. rank 0
/// yields an adapter with no factors.
LoRAAdapter make_lora(const ParamStore& base, std::size_t rank, double alpha, Rng& rng);

/// Adapter over explicit targets. Errors on unknown names or rank above the
/// target's smaller matrix dimension.
LoRAAdapter make_lora(const ParamStore& base, const std::vector<std::string>& targets, std::size_t rank,
                      double alpha, Rng& rng);

/// Params with each targeted W replaced by W + (alpha/r) A B (differentiable
/// in A and B). Untargeted entries alias the base tensors.
ParamStore lora_effective(const ParamStore& base, const LoRAAdapter& adapter);

}  // namespace hypirb::models
