#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hypirb/autodiff/tensor.hpp"

namespace hypirb::diffusion {

using ad::Tensor;

struct NoiseSchedule {
  std::size_t T = 0;
  std::vector<double> beta;
  std::vector<double> alpha_bar;

  /// alpha_bar[t] with a range check.
  double ab(std::size_t t) const;
  /// Smallest t with alpha_bar[t] <= target (T-1 if none).
  std::size_t time_for_alpha_bar(double target) const;
};

/// Linear beta ramp from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end, const std::string& shape = "linear");

/// Schedule from explicit betas (each in (0,1)).
NoiseSchedule schedule_from_betas(std::vector<double> beta);

/// sqrt(ab) * x0 + sqrt(1 - ab) * noise.
Tensor forward_corrupt(const Tensor& x0, std::size_t t, const Tensor& noise, const NoiseSchedule& sched);
Tensor corrupt_at(const Tensor& x0, double alpha_bar, const Tensor& noise);

/// (x_t + (1 - ab) * score) / sqrt(ab).
Tensor restore_from_score(const Tensor& x_t, const Tensor& score, double alpha_bar);

/// score = -eps / sqrt(1 - ab).
Tensor score_from_eps(const Tensor& eps, double alpha_bar);

}  // namespace hypirb::diffusion
