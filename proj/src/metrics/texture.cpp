#include "hypirb/metrics/texture.hpp"

#include <cmath>

namespace hypirb::metrics {

double texture_richness(const double* p, std::size_t h, std::size_t w) {
  if (h < 3 || w < 3) throw ad::ShapeError("texture_richness: patch must be at least 3x3");
  double total = 0.0;
  for (std::size_t y = 1; y + 1 < h; ++y) {
    for (std::size_t x = 1; x + 1 < w; ++x) {
      const double lap = p[(y - 1) * w + x] + p[(y + 1) * w + x] + p[y * w + x - 1] + p[y * w + x + 1] -
                         4.0 * p[y * w + x];
      total += std::abs(lap);
    }
  }
  return total / static_cast<double>((h - 2) * (w - 2));
}

double texture_richness(const ad::Tensor& patch) {
  const auto& s = patch.shape();
  if (s.size() < 2) throw ad::ShapeError("texture_richness: patch must be 2-D, got " + ad::shape_str(s));
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  if (patch.numel() != h * w) {
    throw ad::ShapeError("texture_richness: expected a single 2-D patch, got " + ad::shape_str(s));
  }
  return texture_richness(patch.data().data(), h, w);
}

std::vector<double> texture_richness_batch(const ad::Tensor& batch) {
  if (batch.rank() != 4 || batch.dim(1) != 1) {
    throw ad::ShapeError("texture_richness_batch: expected [N,1,H,W], got " + ad::shape_str(batch.shape()));
  }
  const std::size_t h = batch.dim(2), w = batch.dim(3);
  std::vector<double> out(batch.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = texture_richness(batch.data().data() + i * h * w, h, w);
  return out;
}

}  // namespace hypirb::metrics
