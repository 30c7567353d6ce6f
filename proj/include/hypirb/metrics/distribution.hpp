#pragma once

#include <vector>

#include "hypirb/autodiff/tensor.hpp"

namespace hypirb::metrics {

/// Regular histogram grid; samples outside [lo, hi) fall in the edge bins.
struct HistGrid {
  std::vector<double> lo;
  std::vector<double> hi;
  std::size_t bins = 100;
};

/// Grid spanning both sample sets: per dimension, the pooled mean +- 3 pooled
/// standard deviations widened to include every sample.
HistGrid support_grid(const ad::Tensor& a, const ad::Tensor& b, std::size_t bins = 100);

/// Half the L1 distance between the two binned empirical laws.
double tv_hist(const ad::Tensor& a, const ad::Tensor& b, const HistGrid& grid);

/// Measurable partition of sample space into finitely many cells.
class Partition {
 public:
  /// Cells = nearest center (ties go to the lower index).
  static Partition voronoi(std::vector<std::vector<double>> centers);
  /// Cells = intervals of <direction, x> cut at the given increasing edges
  /// (edges.size() + 1 cells).
  static Partition intervals(std::vector<double> direction, std::vector<double> edges);
  /// Intervals at the k-quantiles of the reference samples' projections.
  static Partition projection_quantiles(const ad::Tensor& reference, std::vector<double> direction, std::size_t k);

  std::size_t cells() const;
  std::size_t dim() const;
  std::size_t assign(const double* x) const;
  /// Fraction of rows of `samples` in each cell.
  std::vector<double> masses(const ad::Tensor& samples) const;

 private:
  std::vector<std::vector<double>> centers_;
  std::vector<double> direction_;
  std::vector<double> edges_;
};

/// max_k |P_a(cell k) - P_b(cell k)|.
double mode_mass_gap(const ad::Tensor& a, const ad::Tensor& b, const Partition& partition);

}  // namespace hypirb::metrics
