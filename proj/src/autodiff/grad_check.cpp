#include "hypirb/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace hypirb::ad {

double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw DomainError("grad_check: step must be positive");
  Tensor probe = x.clone(true);
  Tensor y = f(probe);
  backward(y);
  std::vector<double> analytic(probe.numel(), 0.0);
  if (probe.has_grad()) std::copy(probe.grad().begin(), probe.grad().end(), analytic.begin());

  NoGradGuard guard;
  Tensor work = x.clone(false);
  auto values = work.mutable_data();
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    const double hi = saved + h;
    const double lo = saved - h;
    values[i] = hi;
    const double up = f(work).item();
    values[i] = lo;
    const double down = f(work).item();
    values[i] = saved;
    const double fd = (up - down) / (hi - lo);
    worst = std::max(worst, std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

}  // namespace hypirb::ad
