#pragma once

#include <cstdint>
#include <vector>

#include "hypirb/autodiff/tensor.hpp"

namespace hypirb::metrics {

constexpr std::size_t kW2ExactCap = 512;

/// Exactly rounded sum of the values.
double exact_sum(const std::vector<double>& values);

/// Optimal assignment for a square cost matrix (row-major, n x n); returns
/// the column matched to each row.
std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n);

/// Empirical W2 between equal-size sample sets ([n, ...], rows are points),
/// computed from an exact optimal matching.
double w2_exact(const ad::Tensor& a, const ad::Tensor& b);

/// Mean over n_proj random unit directions of the 1-D W2 of the projections.
double w2_sliced(const ad::Tensor& a, const ad::Tensor& b, std::size_t n_proj, std::uint64_t seed);

/// 1-D W2 from the sorted coupling.
double w2_sorted_1d(std::vector<double> a, std::vector<double> b);

}  // namespace hypirb::metrics
