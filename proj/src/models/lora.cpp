#include "hypirb/models/lora.hpp"

#include <algorithm>
#include <cmath>

#include "hypirb/autodiff/ops.hpp"

namespace hypirb::models {

std::pair<std::size_t, std::size_t> matrix_dims(const ad::Shape& shape) {
  if (shape.size() < 2) throw ad::ShapeError("LoRA target must have rank >= 2, got " + ad::shape_str(shape));
  return {shape[0], ad::shape_numel(shape) / shape[0]};
}

namespace {

bool is_weight_name(const std::string& name) {
  auto ends = [&](const std::string& suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends(".w") || ends(".wt");
}

LoRAAdapter::Factor make_factor(const std::string& name, const Tensor& w, std::size_t rank, Rng& rng) {
  const auto [rows, cols] = matrix_dims(w.shape());
  std::vector<double> a(rows * rank);
  const double std = std::sqrt(1.0 / static_cast<double>(rows));
  for (auto& v : a) v = std * rng.normal();
  return {name, rank, Tensor::from({rows, rank}, std::move(a)), Tensor::zeros({rank, cols})};
}

}  // namespace

LoRAAdapter make_lora(const ParamStore& base, std::size_t rank, double alpha, Rng& rng) {
  LoRAAdapter out;
  out.alpha = alpha;
  if (rank == 0) return out;
  for (const auto& name : base.names()) {
    const Tensor& w = base.at(name);
    if (!is_weight_name(name) || w.rank() < 2) continue;
    const auto [rows, cols] = matrix_dims(w.shape());
    out.factors.push_back(make_factor(name, w, std::min({rank, rows, cols}), rng));
  }
  return out;
}

LoRAAdapter make_lora(const ParamStore& base, const std::vector<std::string>& targets, std::size_t rank,
                      double alpha, Rng& rng) {
  LoRAAdapter out;
  out.alpha = alpha;
  if (rank == 0) return out;
  for (const auto& name : targets) {
    if (!base.contains(name)) throw std::invalid_argument("LoRA target '" + name + "' not in base params");
    const Tensor& w = base.at(name);
    const auto [rows, cols] = matrix_dims(w.shape());
    if (rank > std::min(rows, cols)) {
      throw std::invalid_argument("LoRA rank " + std::to_string(rank) + " exceeds min dims of '" + name + "' " +
                                  ad::shape_str(w.shape()));
    }
    out.factors.push_back(make_factor(name, w, rank, rng));
  }
  return out;
}

ParamStore LoRAAdapter::as_params() const {
  ParamStore p;
  for (const auto& f : factors) {
    p.add("lora." + f.target + ".a", f.a);
    p.add("lora." + f.target + ".b", f.b);
  }
  return p;
}

void LoRAAdapter::bind(const ParamStore& store) {
  for (auto& f : factors) {
    f.a = store.at("lora." + f.target + ".a");
    f.b = store.at("lora." + f.target + ".b");
  }
}

ParamStore lora_effective(const ParamStore& base, const LoRAAdapter& adapter) {
  ParamStore out;
  for (const auto& name : base.names()) out.add(name, base.at(name));
  for (const auto& f : adapter.factors) {
    if (!base.contains(f.target)) throw std::invalid_argument("LoRA target '" + f.target + "' not in base params");
    const Tensor& w = base.at(f.target);
    const auto [rows, cols] = matrix_dims(w.shape());
    if (f.rank == 0) continue;
    if (f.rank > std::min(rows, cols)) {
      throw std::invalid_argument("LoRA rank " + std::to_string(f.rank) + " exceeds min dims of '" + f.target +
                                  "' " + ad::shape_str(w.shape()));
    }
    if (f.a.shape() != ad::Shape{rows, f.rank} || f.b.shape() != ad::Shape{f.rank, cols}) {
      throw ad::ShapeError("LoRA factors for '" + f.target + "' have shapes " + ad::shape_str(f.a.shape()) + " and " +
                           ad::shape_str(f.b.shape()));
    }
    const double s = adapter.alpha / static_cast<double>(f.rank);
    Tensor delta = ad::reshape(ad::scale(ad::matmul(f.a, f.b), s), w.shape());
    out.set(f.target, ad::add(w, delta));
  }
  return out;
}

}  // namespace hypirb::models
