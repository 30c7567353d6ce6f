#pragma once

#include "hypirb/models/params.hpp"

namespace hypirb::models {

struct EMAState {
  ParamStore shadow;
  double decay = 0.999;
};

/// Shadow copy of `current` (detached).
EMAState make_ema(const ParamStore& current, double decay);

/// shadow <- decay * shadow + (1 - decay) * current, per element.
void ema_update(EMAState& state, const ParamStore& current);

}  // namespace hypirb::models
