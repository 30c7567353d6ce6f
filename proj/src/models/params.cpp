#include "hypirb/models/params.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace hypirb::models {

ad::Shape ArchSpec::sample_shape() const {
  if (is_conv()) return {channels, size, size};
  return {data_dim};
}

void to_json(nlohmann::json& j, const ArchSpec& a) {
  j = nlohmann::json{{"kind", a.kind},         {"data_dim", a.data_dim},   {"channels", a.channels},
                     {"size", a.size},         {"hidden", a.hidden},       {"depth", a.depth},
                     {"time_dim", a.time_dim}, {"time_steps", a.time_steps}, {"cond_dim", a.cond_dim}};
}

void from_json(const nlohmann::json& j, ArchSpec& a) {
  j.at("kind").get_to(a.kind);
  j.at("data_dim").get_to(a.data_dim);
  j.at("channels").get_to(a.channels);
  j.at("size").get_to(a.size);
  j.at("hidden").get_to(a.hidden);
  j.at("depth").get_to(a.depth);
  j.at("time_dim").get_to(a.time_dim);
  j.at("time_steps").get_to(a.time_steps);
  j.at("cond_dim").get_to(a.cond_dim);
}

void ParamStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(name);
  values_.push_back(std::move(value));
}

void ParamStore::set(const std::string& name, Tensor value) { at(name) = std::move(value); }

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return values_[it->second];
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return values_[it->second];
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.numel();
  return n;
}

ParamStore ParamStore::clone(bool requires_grad) const {
  ParamStore out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], values_[i].clone(requires_grad));
  return out;
}

void ParamStore::set_requires_grad(bool flag) {
  for (auto& v : values_) v.set_requires_grad(flag);
}

void ParamStore::zero_grad() {
  for (auto& v : values_) v.zero_grad();
}

bool same_values(const ParamStore& a, const ParamStore& b) {
  if (a.names() != b.names()) return false;
  for (const auto& name : a.names()) {
    const auto& x = a.at(name);
    const auto& y = b.at(name);
    if (x.shape() != y.shape()) return false;
    if (std::memcmp(x.data().data(), y.data().data(), x.numel() * sizeof(double)) != 0) return false;
  }
  return true;
}

double max_abs_diff(const ParamStore& a, const ParamStore& b) {
  double worst = 0.0;
  for (const auto& name : a.names()) {
    if (!b.contains(name)) continue;
    auto x = a.at(name).data();
    auto y = b.at(name).data();
    if (x.size() != y.size()) throw ad::ShapeError("max_abs_diff: shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  }
  return worst;
}

}  // namespace hypirb::models
