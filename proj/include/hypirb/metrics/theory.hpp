#pragma once

namespace hypirb::metrics {

/// Constants of the step-count and initial-gradient calculators. All are
/// user-supplied; none is estimated from a network.
struct TheoryConstants {
  double L = 0.0;       // smoothness
  double mu = 0.0;      // strong convexity
  double eta = 0.0;     // generator step size
  double eps0 = 0.0;    // initial W2 error
  double delta_tar = 0.0;
  double C2 = 0.0;
  double L_J = 0.0;
};

/// ln(C2 eps0^2 / delta_tar) / ln(1 / (1 - eta mu)). Returns 0 when
/// C2 eps0^2 <= delta_tar; throws std::domain_error unless eta*mu lies in
/// (0,1) and C2, delta_tar are positive.
double predicted_steps(const TheoryConstants& tc);

/// sqrt(2) * L_J * eps0; throws std::domain_error on negative inputs.
double lemma_bound(double L_J, double eps0);

}  // namespace hypirb::metrics
