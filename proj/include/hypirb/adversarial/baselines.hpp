#pragma once

#include "hypirb/adversarial/domain.hpp"
#include "hypirb/adversarial/generator.hpp"
#include "hypirb/diffusion/dsm.hpp"
#include "hypirb/models/params.hpp"

namespace hypirb::adversarial {

/// Step count, batch and learning-rate schedule shared by every pretraining
/// routine below.
using FitOptions = diffusion::DsmOptions;

/// Noise-prediction network on the domain's clean targets.
models::Model pretrain_diffusion(const Domain& domain, bool conditioned, const diffusion::NoiseSchedule& sched,
                                 const FitOptions& opt, std::uint64_t seed);

/// Regressor U(input, t*) -> x on the score descriptor, so it can seed a
/// generator. kMse: input = lift * y. kDae: input = x + nu * xi.
models::Model pretrain_regressor(const Domain& domain, InitMode kind, bool conditioned, std::size_t t_star,
                                 double dae_nu, const FitOptions& opt, std::uint64_t seed);

struct ClassifierResult {
  models::Model model;
  double heldout_accuracy = 0.0;
};

/// Clean (label 1) vs lifted observation (label 0) classifier on the
/// discriminator descriptor. Accuracy is measured on `heldout` fresh pairs.
ClassifierResult pretrain_disc_classifier(const Domain& domain, const FitOptions& opt, std::uint64_t seed,
                                          std::size_t heldout = 512);

/// Autoencoder fitted to clean patches of a texture domain.
models::Model pretrain_domain_autoencoder(const Domain& domain, const FitOptions& opt, std::uint64_t seed);

/// Mean squared error of a regressor's prediction on a fresh batch.
double regressor_mse(const Domain& domain, const models::Model& net, InitMode kind, std::size_t t_star,
                     double dae_nu, std::size_t n, std::uint64_t seed);

}  // namespace hypirb::adversarial
