#include "hypirb/diffusion/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hypirb::diffusion {

void GMMSpec::validate() const {
  if (means.empty()) throw std::invalid_argument("gmm: no components");
  const std::size_t d = means[0].size();
  if (d == 0) throw std::invalid_argument("gmm: zero-dimensional means");
  for (const auto& m : means) {
    if (m.size() != d) throw std::invalid_argument("gmm: ragged means");
  }
  if (!(variance > 0.0)) throw std::invalid_argument("gmm: variance must be positive");
  if (weights.size() != means.size()) throw std::invalid_argument("gmm: weights/means count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("gmm: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("gmm: weights must sum to 1");
}

GMMSpec ring_gmm(std::size_t k, double radius, double component_std) {
  GMMSpec g;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
    g.means.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  g.variance = component_std * component_std;
  g.weights.assign(k, 1.0 / static_cast<double>(k));
  g.validate();
  return g;
}

GMMSpec standard_normal_gmm(std::size_t d) {
  GMMSpec g;
  g.means.push_back(std::vector<double>(d, 0.0));
  g.variance = 1.0;
  g.weights = {1.0};
  g.validate();
  return g;
}

Tensor sample_gmm(const GMMSpec& gmm, std::size_t n, Rng& rng, std::vector<std::size_t>* labels) {
  gmm.validate();
  const std::size_t d = gmm.dim();
  const double sd = std::sqrt(gmm.variance);
  std::vector<double> out(n * d);
  if (labels) labels->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < gmm.components() && u >= gmm.weights[k]) u -= gmm.weights[k++];
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = gmm.means[k][j] + sd * rng.normal();
    if (labels) (*labels)[i] = k;
  }
  return Tensor::from({n, d}, std::move(out));
}

namespace {

// Component posteriors for the mixture with means c * mu_k and variance v.
std::vector<double> responsibilities(const GMMSpec& gmm, double c, double v, const double* x, std::size_t d) {
  const std::size_t k = gmm.components();
  std::vector<double> logw(k);
  double top = -INFINITY;
  for (std::size_t c_i = 0; c_i < k; ++c_i) {
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - c * gmm.means[c_i][j];
      dist += diff * diff;
    }
    logw[c_i] = gmm.weights[c_i] > 0.0 ? std::log(gmm.weights[c_i]) - dist / (2.0 * v) : -INFINITY;
    top = std::max(top, logw[c_i]);
  }
  double z = 0.0;
  for (auto& lw : logw) {
    lw = std::exp(lw - top);
    z += lw;
  }
  for (auto& lw : logw) lw /= z;
  return logw;
}

Tensor mixture_score(const GMMSpec& gmm, double c, double v, const Tensor& x) {
  gmm.validate();
  const std::size_t d = gmm.dim();
  if (x.rank() != 2 || x.dim(1) != d) throw ad::ShapeError("gmm score: x must be [n," + std::to_string(d) + "]");
  const std::size_t n = x.dim(0);
  auto xs = x.data();
  std::vector<double> out(n * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = xs.data() + i * d;
    const auto r = responsibilities(gmm, c, v, xi, d);
    for (std::size_t k = 0; k < r.size(); ++k) {
      for (std::size_t j = 0; j < d; ++j) out[i * d + j] += r[k] * (c * gmm.means[k][j] - xi[j]) / v;
    }
  }
  return Tensor::from({n, d}, std::move(out));
}

}  // namespace

Tensor analytic_gmm_score(const GMMSpec& gmm, double sigma, const Tensor& x) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("analytic_gmm_score: sigma must be >= 0");
  return mixture_score(gmm, 1.0, gmm.variance + sigma * sigma, x);
}

Tensor analytic_gmm_score_vp(const GMMSpec& gmm, double alpha_bar, const Tensor& x) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw std::invalid_argument("alpha_bar must lie in (0,1]");
  return mixture_score(gmm, std::sqrt(alpha_bar), alpha_bar * gmm.variance + (1.0 - alpha_bar), x);
}

Tensor gmm_posterior_mean(const GMMSpec& gmm, double alpha_bar, const Tensor& x_t) {
  // Tweedie: E[x0 | x_t] = (x_t + (1 - ab) score) / sqrt(ab).
  Tensor s = analytic_gmm_score_vp(gmm, alpha_bar, x_t);
  auto xs = x_t.data();
  auto ss = s.data();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (xs[i] + (1.0 - alpha_bar) * ss[i]) / std::sqrt(alpha_bar);
  return Tensor::from(x_t.shape(), std::move(out));
}

}  // namespace hypirb::diffusion
