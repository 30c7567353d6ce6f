#include "hypirb/metrics/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hypirb/util/rng.hpp"

namespace hypirb::metrics {

double exact_sum(const std::vector<double>& values) {
  // Shewchuk's non-overlapping partials.
  std::vector<double> partials;
  for (double x : values) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  double hi = 0.0;
  if (partials.empty()) return hi;
  std::size_t n = partials.size();
  hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  // Round-half-even correction across the boundary between partials.
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

std::vector<std::size_t> solve_assignment(const std::vector<double>& cost, std::size_t n) {
  if (cost.size() != n * n) throw std::invalid_argument("solve_assignment: cost matrix is not n x n");
  // Shortest augmenting path with row/column potentials (1-based sentinel column 0).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      const double* row = cost.data() + (i0 - 1) * n;
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

namespace {

void check_pair(const ad::Tensor& a, const ad::Tensor& b, const char* who) {
  if (a.rank() < 1 || b.rank() < 1) throw ad::ShapeError(std::string(who) + ": empty sample set");
  if (a.shape() != b.shape()) {
    throw ad::ShapeError(std::string(who) + ": sample sets differ, " + ad::shape_str(a.shape()) + " vs " +
                         ad::shape_str(b.shape()));
  }
}

}  // namespace

double w2_sorted_1d(std::vector<double> a, std::vector<double> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("w2_sorted_1d: size mismatch");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sq[i] = (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(exact_sum(sq) / static_cast<double>(a.size()));
}

double w2_exact(const ad::Tensor& a, const ad::Tensor& b) {
  check_pair(a, b, "w2_exact");
  const std::size_t n = a.dim(0);
  if (n > kW2ExactCap) {
    throw std::invalid_argument("w2_exact: n=" + std::to_string(n) + " exceeds cap " + std::to_string(kW2ExactCap));
  }
  const std::size_t d = a.numel() / n;
  auto as = a.data();
  auto bs = b.data();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = as[i * d + k] - bs[j * d + k];
        c += diff * diff;
      }
      cost[i * n + j] = c;
    }
  }
  const auto match = solve_assignment(cost, n);
  std::vector<double> chosen(n);
  for (std::size_t i = 0; i < n; ++i) chosen[i] = cost[i * n + match[i]];
  return std::sqrt(exact_sum(chosen) / static_cast<double>(n));
}

double w2_sliced(const ad::Tensor& a, const ad::Tensor& b, std::size_t n_proj, std::uint64_t seed) {
  check_pair(a, b, "w2_sliced");
  if (n_proj < 1) throw std::invalid_argument("w2_sliced: n_proj must be >= 1");
  const std::size_t n = a.dim(0);
  const std::size_t d = a.numel() / n;
  auto as = a.data();
  auto bs = b.data();
  Rng rng(seed);
  double total = 0.0;
  std::vector<double> dir(d), pa(n), pb(n);
  for (std::size_t p = 0; p < n_proj; ++p) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& e : dir) {
        e = rng.normal();
        norm += e * e;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& e : dir) e /= norm;
    for (std::size_t i = 0; i < n; ++i) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        sa += dir[k] * as[i * d + k];
        sb += dir[k] * bs[i * d + k];
      }
      pa[i] = sa;
      pb[i] = sb;
    }
    total += w2_sorted_1d(pa, pb);
  }
  return total / static_cast<double>(n_proj);
}

}  // namespace hypirb::metrics
