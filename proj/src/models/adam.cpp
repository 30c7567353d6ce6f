#include "hypirb/models/adam.hpp"

#include <cmath>

namespace hypirb::models {

Adam::Adam(const ParamStore& params, double lr_, double beta1_, double beta2_, double eps_)
    : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_) {
  for (const auto& name : params.names()) {
    m.add(name, Tensor::zeros(params.at(name).shape()));
    v.add(name, Tensor::zeros(params.at(name).shape()));
  }
}

void Adam::step(ParamStore& params) {
  if (params.names() != m.names()) throw ad::ShapeError("Adam::step: parameter set differs from construction");
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (const auto& name : params.names()) {
    Tensor& p = params.at(name);
    if (!p.has_grad()) continue;
    auto w = p.mutable_data();
    auto g = p.grad();
    auto mv = m.at(name).mutable_data();
    auto vv = v.at(name).mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      mv[i] = beta1 * mv[i] + (1.0 - beta1) * g[i];
      vv[i] = beta2 * vv[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (mv[i] / c1) / (std::sqrt(vv[i] / c2) + eps);
    }
    p.zero_grad();
  }
}

}  // namespace hypirb::models
