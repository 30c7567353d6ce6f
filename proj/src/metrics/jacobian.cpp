#include "hypirb/metrics/jacobian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hypirb/autodiff/ops.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::metrics {

double grad_norm(const models::ParamStore& params) {
  double total = 0.0;
  for (const auto& name : params.names()) {
    const auto& t = params.at(name);
    if (!t.has_grad()) throw std::invalid_argument("grad_norm: parameter '" + name + "' has no gradient");
    for (double g : t.grad()) total += g * g;
  }
  return std::sqrt(total);
}

double combine_norms(const std::vector<double>& block_norms) {
  double total = 0.0;
  for (double n : block_norms) total += n * n;
  return std::sqrt(total);
}

namespace {

using models::ParamStore;
using Direction = std::vector<std::vector<double>>;  // one vector per block

ad::Tensor row(const ad::Tensor& y, std::size_t i) {
  ad::Shape s = y.shape();
  const std::size_t per = y.numel() / s[0];
  s[0] = 1;
  auto v = y.data();
  return ad::Tensor::from(s, std::vector<double>(v.begin() + i * per, v.begin() + (i + 1) * per));
}

double norm_of(const Direction& d) {
  double s = 0.0;
  for (const auto& b : d)
    for (double v : b) s += v * v;
  return std::sqrt(s);
}

ParamStore shifted(const ParamStore& p, const std::vector<std::size_t>& blocks, const Direction& dir, double h) {
  ParamStore out;
  for (std::size_t k = 0; k < p.names().size(); ++k) out.add(p.names()[k], p.at(p.names()[k]));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& name = p.names()[blocks[b]];
    auto base = p.at(name).data();
    std::vector<double> v(base.begin(), base.end());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += h * dir[b][i];
    out.set(name, ad::Tensor::from(p.at(name).shape(), std::move(v)));
  }
  return out;
}

// Largest singular value of d gen(y) / d theta_blocks.
std::pair<double, bool> spectral_norm(const GeneratorFn& gen, const ParamStore& params,
                                      const std::vector<std::size_t>& blocks, const ad::Tensor& y,
                                      std::size_t iterations, Rng& rng, double h) {
  Direction v(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) v[b] = rng.normals(params.at(params.names()[blocks[b]]).numel());
  double nv = norm_of(v);
  double estimate = 0.0, previous = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    for (auto& b : v)
      for (auto& e : b) e /= nv;
    ad::Tensor up, down;
    {
      ad::NoGradGuard guard;
      up = gen(shifted(params, blocks, v, h), y);
      down = gen(shifted(params, blocks, v, -h), y);
    }
    std::vector<double> jv(up.numel());
    for (std::size_t i = 0; i < jv.size(); ++i) jv[i] = (up.at(i) - down.at(i)) / (2.0 * h);

    ParamStore probe;
    for (const auto& name : params.names()) probe.add(name, params.at(name));
    for (auto idx : blocks) probe.set(params.names()[idx], params.at(params.names()[idx]).clone(true));
    ad::Tensor out = gen(probe, y);
    Direction jtjv(blocks.size());
    if (out.requires_grad()) {
      ad::backward(ad::sum(ad::mul(out, ad::Tensor::from(out.shape(), jv))));
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& t = probe.at(params.names()[blocks[b]]);
      jtjv[b] = t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                             : std::vector<double>(t.numel(), 0.0);
    }
    previous = estimate;
    nv = norm_of(jtjv);
    estimate = std::sqrt(nv);  // ||J^T J v|| -> sigma_max^2 for unit v
    if (nv == 0.0) return {0.0, true};
    v = std::move(jtjv);
  }
  const bool converged = std::abs(estimate - previous) <= 1e-3 * std::max(estimate, 1e-12);
  return {estimate, converged};
}

}  // namespace

JacobianEstimate jacobian_norm_estimate(const GeneratorFn& gen, const models::ParamStore& params, const ad::Tensor& y,
                                        std::size_t iterations, std::uint64_t seed, double h) {
  if (iterations < 1) throw std::invalid_argument("jacobian_norm_estimate: need at least one iteration");
  if (params.size() == 0) throw std::invalid_argument("jacobian_norm_estimate: no parameters");
  JacobianEstimate est;
  Rng rng(seed);
  std::vector<std::size_t> all(params.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  est.per_block.resize(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) est.per_block[k] = {params.names()[k], 0.0};
  for (std::size_t i = 0; i < y.dim(0); ++i) {
    const ad::Tensor yi = row(y, i);
    auto [n, ok] = spectral_norm(gen, params, all, yi, iterations, rng, h);
    est.norm = std::max(est.norm, n);
    est.converged = est.converged && ok;
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto [nb, okb] = spectral_norm(gen, params, {k}, yi, iterations, rng, h);
      est.per_block[k].second = std::max(est.per_block[k].second, nb);
      est.converged = est.converged && okb;
    }
  }
  return est;
}

}  // namespace hypirb::metrics
