#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hypirb/autodiff/tensor.hpp"

namespace hypirb::models {

using ad::Tensor;

/// Architecture descriptor. One descriptor drives both the score network and
/// the generator built from it.
struct ArchSpec {
  std::string kind = "score_mlp";  // score_mlp | score_conv | disc_mlp | disc_conv | autoencoder
  std::size_t data_dim = 2;        // point dimension (mlp kinds)
  std::size_t channels = 1;        // image channels (conv kinds)
  std::size_t size = 16;           // image side length (conv kinds)
  std::size_t hidden = 128;
  std::size_t depth = 3;           // hidden layers
  std::size_t time_dim = 16;       // sinusoidal embedding width (score kinds)
  std::size_t time_steps = 200;    // valid t is [0, time_steps)
  std::size_t cond_dim = 0;        // texture conditioning inputs

  bool is_conv() const { return kind == "score_conv" || kind == "disc_conv" || kind == "autoencoder"; }
  bool is_score() const { return kind == "score_mlp" || kind == "score_conv"; }
  /// Shape of one sample, without the batch axis.
  ad::Shape sample_shape() const;

  bool operator==(const ArchSpec&) const = default;
};

void to_json(nlohmann::json& j, const ArchSpec& a);
void from_json(const nlohmann::json& j, ArchSpec& a);

/// Insertion-ordered name -> tensor map.
class ParamStore {
 public:
  void add(const std::string& name, Tensor value);
  /// Replaces the tensor under an existing name.
  void set(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t numel() const;

  /// Deep copy; every leaf gets the given requires_grad flag.
  ParamStore clone(bool requires_grad = false) const;
  void set_requires_grad(bool flag);
  void zero_grad();

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Model {
  ArchSpec arch;
  ParamStore params;
};

/// Bitwise equality of names, shapes and values.
bool same_values(const ParamStore& a, const ParamStore& b);
/// max |a - b| over common names (shapes must agree).
double max_abs_diff(const ParamStore& a, const ParamStore& b);

}  // namespace hypirb::models
