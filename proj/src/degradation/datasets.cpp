#include "hypirb/degradation/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hypirb/metrics/texture.hpp"

namespace hypirb::degradation {

double TextureSpec::standardize(double richness) const {
  const double width = richness_hi - richness_lo;
  if (width <= 0.0) return 0.0;
  return (richness - 0.5 * (richness_lo + richness_hi)) / (width / std::sqrt(12.0));
}

double TextureSpec::unstandardize(double tau) const {
  const double width = richness_hi - richness_lo;
  if (width <= 0.0) return richness_lo;
  return 0.5 * (richness_lo + richness_hi) + tau * width / std::sqrt(12.0);
}

namespace {

struct Grating {
  double fx, fy, phase, amp;
};

Grating random_grating(Rng& rng, double f_lo, double f_hi, double amp) {
  const double angle = rng.uniform(0.0, std::numbers::pi);
  const double f = rng.uniform(f_lo, f_hi);
  return {f * std::cos(angle), f * std::sin(angle), rng.uniform(0.0, 2.0 * std::numbers::pi), amp};
}

void add_grating(const Grating& g, std::size_t size, double scale, double* out) {
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x)
      out[y * size + x] += scale * g.amp *
                           std::sin(two_pi * (g.fx * static_cast<double>(x) + g.fy * static_cast<double>(y)) + g.phase);
}

}  // namespace

void render_texture(const TextureSpec& spec, double richness, Rng& rng, double* out) {
  if (spec.size < 3) throw std::invalid_argument("texture size must be >= 3");
  if (!(richness > 0.0)) throw std::invalid_argument("texture richness must be positive");
  const std::size_t n = spec.size * spec.size;
  std::fill(out, out + n, 0.0);
  // Smooth field: two gratings under one cycle per 8 px.
  for (int i = 0; i < 2; ++i) add_grating(random_grating(rng, 0.03, 0.12, 0.5), spec.size, 1.0, out);
  // Detail weight grows with the target so richer patches carry more fine texture.
  const double span = spec.richness_hi - spec.richness_lo;
  const double u = span > 0.0 ? std::clamp((richness - spec.richness_lo) / span, 0.0, 1.0) : 0.5;
  const double detail = 0.15 + 0.85 * u;
  for (int i = 0; i < 3; ++i) add_grating(random_grating(rng, 0.22, 0.38, 1.0 / std::sqrt(3.0)), spec.size, detail, out);
  const double r = metrics::texture_richness(out, spec.size, spec.size);
  const double s = richness / r;
  for (std::size_t i = 0; i < n; ++i) out[i] *= s;
}

Dataset sample_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
  Dataset d;
  if (spec.variant == "gmm") {
    d.x = diffusion::sample_gmm(spec.gmm, n, rng, &d.labels);
  } else if (spec.variant == "textures") {
    const auto& t = spec.textures;
    if (!(t.richness_lo > 0.0 && t.richness_lo <= t.richness_hi)) {
      throw std::invalid_argument("texture richness range must satisfy 0 < lo <= hi");
    }
    std::vector<double> px(n * t.size * t.size);
    d.richness.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      d.richness[i] = rng.uniform(t.richness_lo, t.richness_hi);
      if (t.richness_lo == t.richness_hi) d.richness[i] = t.richness_lo;
      render_texture(t, d.richness[i], rng, px.data() + i * t.size * t.size);
    }
    d.x = Tensor::from({n, 1, t.size, t.size}, std::move(px));
  } else {
    throw std::invalid_argument("unknown dataset variant '" + spec.variant + "'");
  }
  return d;
}

Dataset gen_dataset(const DatasetSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_dataset(spec, n, rng);
}

Tensor richness_condition(const TextureSpec& spec, const std::vector<double>& richness) {
  std::vector<double> v(richness.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = spec.standardize(richness[i]);
  const std::size_t n = v.size();
  return Tensor::from({n, 1}, std::move(v));
}

}  // namespace hypirb::degradation
