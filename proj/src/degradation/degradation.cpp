#include "hypirb/degradation/degradation.hpp"

#include <cmath>
#include <stdexcept>

#include "hypirb/autodiff/ops.hpp"

namespace hypirb::degradation {

namespace {

double determinant(std::vector<double> m, std::size_t d) {
  double det = 1.0;
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r)
      if (std::abs(m[r * d + c]) > std::abs(m[piv * d + c])) piv = r;
    if (m[piv * d + c] == 0.0) return 0.0;
    if (piv != c) {
      for (std::size_t j = 0; j < d; ++j) std::swap(m[c * d + j], m[piv * d + j]);
      det = -det;
    }
    det *= m[c * d + c];
    for (std::size_t r = c + 1; r < d; ++r) {
      const double f = m[r * d + c] / m[c * d + c];
      for (std::size_t j = c; j < d; ++j) m[r * d + j] -= f * m[c * d + j];
    }
  }
  return det;
}

}  // namespace

void DegradationSpec::validate() const {
  if (!kernel.defined()) throw std::invalid_argument("degradation: kernel missing");
  if (!(eta >= 0.0)) throw std::invalid_argument("degradation: eta must be >= 0");
  if (kernel.rank() != 2 || kernel.dim(0) != kernel.dim(1)) {
    throw ad::ShapeError("degradation: kernel must be square, got " + ad::shape_str(kernel.shape()));
  }
  if (kind == Kind::kImage) {
    if (kernel.dim(0) % 2 == 0) throw ad::ShapeError("degradation: blur kernel extent must be odd");
    double total = 0.0;
    for (double v : kernel.data()) {
      if (v < 0.0) throw std::invalid_argument("degradation: blur kernel has a negative entry");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("degradation: blur kernel must sum to 1");
  } else {
    const auto k = kernel.data();
    if (determinant({k.begin(), k.end()}, kernel.dim(0)) == 0.0) {
      throw std::invalid_argument("degradation: point map is singular");
    }
  }
}

Tensor identity_kernel(std::size_t k) {
  if (k % 2 == 0) throw std::invalid_argument("kernel extent must be odd");
  auto t = Tensor::zeros({k, k});
  t.mutable_data()[(k / 2) * k + k / 2] = 1.0;
  return t;
}

Tensor box_kernel(std::size_t k) {
  if (k % 2 == 0) throw std::invalid_argument("kernel extent must be odd");
  return Tensor::full({k, k}, 1.0 / static_cast<double>(k * k));
}

Tensor gaussian_kernel(double sigma, std::size_t k) {
  if (k % 2 == 0) throw std::invalid_argument("kernel extent must be odd");
  if (!(sigma > 0.0)) throw std::invalid_argument("gaussian kernel needs sigma > 0");
  std::vector<double> v(k * k);
  const double c = static_cast<double>(k / 2);
  double total = 0.0;
  for (std::size_t y = 0; y < k; ++y) {
    for (std::size_t x = 0; x < k; ++x) {
      const double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
      v[y * k + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      total += v[y * k + x];
    }
  }
  for (auto& e : v) e /= total;
  return Tensor::from({k, k}, std::move(v));
}

DegradationSpec image_degradation(Tensor kernel, double eta) {
  DegradationSpec s{DegradationSpec::Kind::kImage, std::move(kernel), eta};
  s.validate();
  return s;
}

DegradationSpec point_degradation(std::size_t d, double gain, double eta) {
  auto m = Tensor::zeros({d, d});
  for (std::size_t i = 0; i < d; ++i) m.mutable_data()[i * d + i] = gain;
  DegradationSpec s{DegradationSpec::Kind::kPoint, m, eta};
  s.validate();
  return s;
}

Tensor degrade(const Tensor& x, const DegradationSpec& spec, Rng& rng) {
  spec.validate();
  ad::NoGradGuard guard;
  Tensor clean;
  if (spec.kind == DegradationSpec::Kind::kPoint) {
    if (x.rank() != 2 || x.dim(1) != spec.kernel.dim(0)) {
      throw ad::ShapeError("degrade: points " + ad::shape_str(x.shape()) + " vs map " +
                           ad::shape_str(spec.kernel.shape()));
    }
    clean = ad::matmul(x, ad::transpose(spec.kernel));
  } else {
    if (x.rank() != 4) throw ad::ShapeError("degrade: images must be [N,C,H,W], got " + ad::shape_str(x.shape()));
    const std::size_t k = spec.kernel.dim(0);
    Tensor flat = ad::reshape(x, {x.dim(0) * x.dim(1), 1, x.dim(2), x.dim(3)});
    clean = ad::reshape(ad::conv2d(flat, ad::reshape(spec.kernel, {1, 1, k, k})), x.shape());
  }
  if (spec.eta == 0.0) return clean.detach();
  auto v = clean.data();
  std::vector<double> out(v.begin(), v.end());
  for (auto& e : out) e += spec.eta * rng.normal();
  return Tensor::from(x.shape(), std::move(out));
}

Tensor degrade(const Tensor& x, const DegradationSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return degrade(x, spec, rng);
}

double kernel_mismatch(const Tensor& k_deg, const Tensor& k_sigma) {
  if (k_deg.shape() != k_sigma.shape()) {
    throw ad::ShapeError("kernel_mismatch: support " + ad::shape_str(k_deg.shape()) + " vs " +
                         ad::shape_str(k_sigma.shape()));
  }
  double total = 0.0;
  auto a = k_deg.data();
  auto b = k_sigma.data();
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total;
}

}  // namespace hypirb::degradation
