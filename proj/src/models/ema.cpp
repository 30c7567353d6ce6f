#include "hypirb/models/ema.hpp"

namespace hypirb::models {

EMAState make_ema(const ParamStore& current, double decay) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw std::invalid_argument("EMA decay must lie in [0,1]");
  return {current.clone(false), decay};
}

void ema_update(EMAState& state, const ParamStore& current) {
  if (state.shadow.names() != current.names()) throw ad::ShapeError("ema_update: parameter sets differ");
  const double d = state.decay;
  for (const auto& name : current.names()) {
    Tensor& s = state.shadow.at(name);
    const Tensor& c = current.at(name);
    if (s.shape() != c.shape()) {
      throw ad::ShapeError("ema_update: '" + name + "' " + ad::shape_str(s.shape()) + " vs " +
                           ad::shape_str(c.shape()));
    }
    auto sv = s.mutable_data();
    auto cv = c.data();
    for (std::size_t i = 0; i < sv.size(); ++i) sv[i] = d * sv[i] + (1.0 - d) * cv[i];
  }
}

}  // namespace hypirb::models
