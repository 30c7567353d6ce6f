#include "hypirb/metrics/theory.hpp"

#include <cmath>
#include <stdexcept>

namespace hypirb::metrics {

double predicted_steps(const TheoryConstants& tc) {
  const double rate = tc.eta * tc.mu;
  if (!(rate > 0.0 && rate < 1.0)) throw std::domain_error("predicted_steps: eta*mu must lie in (0,1)");
  if (!(tc.C2 > 0.0) || !(tc.delta_tar > 0.0) || !(tc.eps0 >= 0.0)) {
    throw std::domain_error("predicted_steps: C2 and delta_tar must be positive, eps0 non-negative");
  }
  const double start = tc.C2 * tc.eps0 * tc.eps0;
  if (start <= tc.delta_tar) return 0.0;
  return std::log(start / tc.delta_tar) / -std::log1p(-rate);
}

double lemma_bound(double L_J, double eps0) {
  if (!(L_J >= 0.0) || !(eps0 >= 0.0)) throw std::domain_error("lemma_bound: inputs must be non-negative");
  return std::sqrt(2.0) * L_J * eps0;
}

}  // namespace hypirb::metrics
