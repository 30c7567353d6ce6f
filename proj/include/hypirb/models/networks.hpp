#pragma once

#include <vector>

#include "hypirb/models/params.hpp"
#include "hypirb/util/rng.hpp"

namespace hypirb::models {

/// Fresh parameters for any descriptor kind. Scale-aware normal init.
Model init_model(const ArchSpec& arch, Rng& rng);

/// Sinusoidal embedding of integer times, [N, dim].
Tensor time_embedding(const std::vector<std::size_t>& t, std::size_t dim);

/// Noise prediction for a batch x: [N, ...sample_shape]. `t` holds one time
/// per sample (or a single entry broadcast to all). `cond` is [N, cond_dim] or
/// null; a null cond contributes nothing, which equals passing zeros.
Tensor score_net_forward(const ArchSpec& arch, const ParamStore& p, const Tensor& x,
                         const std::vector<std::size_t>& t, const Tensor* cond = nullptr);

struct DiscOutput {
  Tensor logit;     // [N]
  Tensor features;  // [N, hidden]
};
DiscOutput discriminator_forward(const ArchSpec& arch, const ParamStore& p, const Tensor& x);

/// Residual conv encoder/decoder with a latent of the input's shape.
Tensor ae_encode(const ArchSpec& arch, const ParamStore& p, const Tensor& x);
Tensor ae_decode(const ArchSpec& arch, const ParamStore& p, const Tensor& z);
struct AEOutput {
  Tensor z;
  Tensor recon;
};
AEOutput autoencoder_forward(const ArchSpec& arch, const ParamStore& p, const Tensor& x);

/// Throws ShapeError unless x is [N, ...sample_shape].
void check_batch(const ArchSpec& arch, const Tensor& x, const char* who);

}  // namespace hypirb::models
