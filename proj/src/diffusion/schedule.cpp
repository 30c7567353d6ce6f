#include "hypirb/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>

#include "hypirb/autodiff/ops.hpp"

namespace hypirb::diffusion {

double NoiseSchedule::ab(std::size_t t) const {
  if (t >= T) throw std::out_of_range("time index " + std::to_string(t) + " outside [0," + std::to_string(T) + ")");
  return alpha_bar[t];
}

std::size_t NoiseSchedule::time_for_alpha_bar(double target) const {
  for (std::size_t t = 0; t < T; ++t) {
    if (alpha_bar[t] <= target) return t;
  }
  return T - 1;
}

NoiseSchedule schedule_from_betas(std::vector<double> beta) {
  if (beta.empty()) throw std::invalid_argument("schedule needs T >= 1");
  NoiseSchedule s;
  s.T = beta.size();
  s.alpha_bar.resize(s.T);
  double prod = 1.0;
  for (std::size_t t = 0; t < s.T; ++t) {
    if (!(beta[t] > 0.0 && beta[t] < 1.0)) {
      throw std::invalid_argument("beta[" + std::to_string(t) + "]=" + std::to_string(beta[t]) +
                                  " must lie in (0,1); a zero beta leaves alpha_bar flat");
    }
    prod *= 1.0 - beta[t];
    s.alpha_bar[t] = prod;
  }
  s.beta = std::move(beta);
  return s;
}

NoiseSchedule make_schedule(std::size_t T, double beta_start, double beta_end, const std::string& shape) {
  if (shape != "linear") throw std::invalid_argument("unsupported schedule shape '" + shape + "'");
  if (T < 1) throw std::invalid_argument("schedule needs T >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("schedule requires 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> beta(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double f = T == 1 ? 0.0 : static_cast<double>(t) / static_cast<double>(T - 1);
    beta[t] = beta_start + f * (beta_end - beta_start);
  }
  return schedule_from_betas(std::move(beta));
}

Tensor corrupt_at(const Tensor& x0, double alpha_bar, const Tensor& noise) {
  return ad::add(ad::scale(x0, std::sqrt(alpha_bar)), ad::scale(noise, std::sqrt(1.0 - alpha_bar)));
}

Tensor forward_corrupt(const Tensor& x0, std::size_t t, const Tensor& noise, const NoiseSchedule& sched) {
  return corrupt_at(x0, sched.ab(t), noise);
}

Tensor restore_from_score(const Tensor& x_t, const Tensor& score, double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw ad::DomainError("alpha_bar must lie in (0,1]");
  return ad::scale(ad::add(x_t, ad::scale(score, 1.0 - alpha_bar)), 1.0 / std::sqrt(alpha_bar));
}

Tensor score_from_eps(const Tensor& eps, double alpha_bar) {
  if (!(alpha_bar < 1.0)) throw ad::DomainError("score undefined at alpha_bar = 1");
  return ad::scale(eps, -1.0 / std::sqrt(1.0 - alpha_bar));
}

}  // namespace hypirb::diffusion
