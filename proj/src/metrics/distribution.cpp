#include "hypirb/metrics/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace hypirb::metrics {

namespace {

std::size_t rows_of(const ad::Tensor& t, const char* who) {
  if (!t.defined() || t.rank() < 1 || t.dim(0) == 0) throw std::invalid_argument(std::string(who) + ": empty sample set");
  return t.dim(0);
}

}  // namespace

HistGrid support_grid(const ad::Tensor& a, const ad::Tensor& b, std::size_t bins) {
  const std::size_t na = rows_of(a, "support_grid"), nb = rows_of(b, "support_grid");
  const std::size_t d = a.numel() / na;
  if (b.numel() / nb != d) throw ad::ShapeError("support_grid: dimension mismatch");
  HistGrid g;
  g.bins = bins;
  for (std::size_t k = 0; k < d; ++k) {
    double sum = 0.0, sq = 0.0, mn = INFINITY, mx = -INFINITY;
    for (const auto* t : {&a, &b}) {
      const std::size_t n = t->dim(0);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = t->at(i * d + k);
        sum += v;
        sq += v * v;
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
    }
    const double n = static_cast<double>(na + nb);
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, sq / n - mean * mean));
    double lo = std::min(mn, mean - 3.0 * sd);
    double hi = std::max(mx, mean + 3.0 * sd);
    if (hi <= lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    g.lo.push_back(lo);
    g.hi.push_back(std::nextafter(hi, INFINITY));
  }
  return g;
}

double tv_hist(const ad::Tensor& a, const ad::Tensor& b, const HistGrid& grid) {
  const std::size_t na = rows_of(a, "tv_hist"), nb = rows_of(b, "tv_hist");
  const std::size_t d = a.numel() / na;
  if (b.numel() / nb != d || grid.lo.size() != d || grid.hi.size() != d) {
    throw ad::ShapeError("tv_hist: sample/grid dimensions disagree");
  }
  if (grid.bins == 0) throw std::invalid_argument("tv_hist: grid needs at least one bin");
  auto bin_of = [&](const ad::Tensor& t, std::size_t i) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const double v = t.at(i * d + k);
      const double f = (v - grid.lo[k]) / (grid.hi[k] - grid.lo[k]) * static_cast<double>(grid.bins);
      const long idx = std::clamp(static_cast<long>(std::floor(f)), 0L, static_cast<long>(grid.bins) - 1);
      flat = flat * grid.bins + static_cast<std::size_t>(idx);
    }
    return flat;
  };
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> hist;
  for (std::size_t i = 0; i < na; ++i) ++hist[bin_of(a, i)].first;
  for (std::size_t i = 0; i < nb; ++i) ++hist[bin_of(b, i)].second;
  double total = 0.0;
  for (const auto& [bin, c] : hist) {
    total += std::abs(static_cast<double>(c.first) / static_cast<double>(na) -
                      static_cast<double>(c.second) / static_cast<double>(nb));
  }
  return std::min(1.0, 0.5 * total);
}

Partition Partition::voronoi(std::vector<std::vector<double>> centers) {
  if (centers.empty()) throw std::invalid_argument("Partition: no centers");
  for (const auto& c : centers) {
    if (c.size() != centers[0].size() || c.empty()) throw std::invalid_argument("Partition: ragged centers");
  }
  Partition p;
  p.centers_ = std::move(centers);
  return p;
}

Partition Partition::intervals(std::vector<double> direction, std::vector<double> edges) {
  if (direction.empty()) throw std::invalid_argument("Partition: empty direction");
  if (!std::is_sorted(edges.begin(), edges.end())) throw std::invalid_argument("Partition: edges must increase");
  Partition p;
  p.direction_ = std::move(direction);
  p.edges_ = std::move(edges);
  return p;
}

Partition Partition::projection_quantiles(const ad::Tensor& reference, std::vector<double> direction, std::size_t k) {
  const std::size_t n = rows_of(reference, "projection_quantiles");
  const std::size_t d = reference.numel() / n;
  if (direction.size() != d) throw ad::ShapeError("projection_quantiles: direction length mismatch");
  if (k < 1) throw std::invalid_argument("projection_quantiles: k must be >= 1");
  std::vector<double> proj(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += direction[j] * reference.at(i * d + j);
    proj[i] = s;
  }
  std::sort(proj.begin(), proj.end());
  std::vector<double> edges;
  for (std::size_t q = 1; q < k; ++q) edges.push_back(proj[q * n / k]);
  return intervals(std::move(direction), std::move(edges));
}

std::size_t Partition::cells() const { return centers_.empty() ? edges_.size() + 1 : centers_.size(); }

std::size_t Partition::dim() const { return centers_.empty() ? direction_.size() : centers_[0].size(); }

std::size_t Partition::assign(const double* x) const {
  if (!centers_.empty()) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t c = 0; c < centers_.size(); ++c) {
      double dist = 0.0;
      for (std::size_t j = 0; j < centers_[c].size(); ++j) dist += (x[j] - centers_[c][j]) * (x[j] - centers_[c][j]);
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    return best;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < direction_.size(); ++j) s += direction_[j] * x[j];
  return static_cast<std::size_t>(std::upper_bound(edges_.begin(), edges_.end(), s) - edges_.begin());
}

std::vector<double> Partition::masses(const ad::Tensor& samples) const {
  const std::size_t n = rows_of(samples, "Partition::masses");
  if (samples.numel() / n != dim()) throw ad::ShapeError("Partition::masses: sample dimension mismatch");
  std::vector<double> m(cells(), 0.0);
  const double* p = samples.data().data();
  for (std::size_t i = 0; i < n; ++i) m[assign(p + i * dim())] += 1.0;
  for (auto& v : m) v /= static_cast<double>(n);
  return m;
}

double mode_mass_gap(const ad::Tensor& a, const ad::Tensor& b, const Partition& partition) {
  const auto ma = partition.masses(a);
  const auto mb = partition.masses(b);
  double gap = 0.0;
  for (std::size_t k = 0; k < ma.size(); ++k) gap = std::max(gap, std::abs(ma[k] - mb[k]));
  return gap;
}

}  // namespace hypirb::metrics
