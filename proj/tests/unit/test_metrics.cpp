#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "hypirb/autodiff/ops.hpp"
#include "hypirb/metrics/distribution.hpp"
#include "hypirb/metrics/jacobian.hpp"
#include "hypirb/metrics/texture.hpp"
#include "hypirb/metrics/theory.hpp"
#include "hypirb/metrics/transport.hpp"
#include "hypirb/util/rng.hpp"

using namespace hypirb;
using namespace hypirb::metrics;
using ad::Tensor;

namespace {

Tensor gaussian(std::size_t n, std::size_t d, double shift, Rng& rng) {
  auto v = rng.normals(n * d);
  for (std::size_t i = 0; i < n; ++i) v[i * d] += shift;
  return Tensor::from({n, d}, v);
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

Tensor patch(std::size_t h, std::size_t w, const std::function<double(std::size_t, std::size_t)>& f) {
  std::vector<double> v(h * w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) v[r * w + c] = f(r, c);
  return Tensor::from({h, w}, v);
}

TheoryConstants paper_constants() {
  TheoryConstants tc;
  tc.L = 300.0;
  tc.mu = 0.06;
  tc.eta = 1.0 / 300.0;
  tc.eps0 = 5e-3;
  tc.delta_tar = 1e-5;
  tc.C2 = 2.0;
  return tc;
}

}  // namespace

TEST_CASE("exact w2 small examples") {
  Rng rng(1);
  auto a = gaussian(50, 2, 0.0, rng);
  CHECK(w2_exact(a, a) == 0.0);
  CHECK(w2_exact(Tensor::from({1, 1}, {0.0}), Tensor::from({1, 1}, {3.0})) == 3.0);
  CHECK_THROWS(w2_exact(a, gaussian(49, 2, 0.0, rng)));
  CHECK_THROWS(w2_exact(gaussian(513, 1, 0.0, rng), gaussian(513, 1, 0.0, rng)));
}

TEST_CASE("exact w2 of shifted unit gaussians") {
  Rng rng(2);
  for (int rep = 0; rep < 3; ++rep) {
    const double w = w2_exact(gaussian(256, 1, 0.0, rng), gaussian(256, 1, 2.0, rng));
    CHECK(w == doctest::Approx(2.0).epsilon(0.075));
  }
}

TEST_CASE("exact w2 is symmetric, satisfies the triangle inequality and matches sorting in 1-D") {
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    auto a = gaussian(40, 2, 0.0, rng), b = gaussian(40, 2, 1.0, rng), c = gaussian(40, 2, -0.5, rng);
    CHECK(w2_exact(a, b) == doctest::Approx(w2_exact(b, a)).epsilon(1e-12));
    CHECK(w2_exact(a, c) <= w2_exact(a, b) + w2_exact(b, c) + 1e-9);
  }
  auto x = rng.normals(64), y = rng.normals(64);
  for (auto& v : y) v = 0.5 * v * v;
  const double exact = w2_exact(Tensor::from({64, 1}, x), Tensor::from({64, 1}, y));
  CHECK(exact == doctest::Approx(w2_sorted_1d(x, y)).epsilon(1e-12));
}

TEST_CASE("assignment solver finds the optimum") {
  // Brute force over all permutations of 5.
  Rng rng(4);
  std::vector<double> cost(25);
  for (auto& c : cost) c = rng.uniform();
  std::vector<std::size_t> perm{0, 1, 2, 3, 4};
  double best = 1e300;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < 5; ++i) s += cost[i * 5 + perm[i]];
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  auto match = solve_assignment(cost, 5);
  double got = 0.0;
  for (std::size_t i = 0; i < 5; ++i) got += cost[i * 5 + match[i]];
  CHECK(got == doctest::Approx(best).epsilon(1e-14));
}

TEST_CASE("exact sum is correctly rounded") {
  CHECK(exact_sum({1e16, 1.0, -1e16}) == 1.0);
  CHECK(exact_sum({}) == 0.0);
}

TEST_CASE("sliced w2") {
  Rng rng(5);
  auto a = gaussian(400, 2, 0.0, rng);
  CHECK(w2_sliced(a, a, 16, 1) == 0.0);
  auto x = gaussian(100, 1, 0.0, rng), y = gaussian(100, 1, 1.0, rng);
  CHECK(w2_sliced(x, y, 7, 3) == doctest::Approx(w2_exact(x, y)).epsilon(1e-12));
  // Shifted gaussians in 2-D: E|cos| = 2/pi.
  const double s = w2_sliced(gaussian(20000, 2, 0.0, rng), gaussian(20000, 2, 2.0, rng), 400, 7);
  CHECK(s == doctest::Approx(4.0 / M_PI).epsilon(0.05));
  CHECK_THROWS(w2_sliced(a, a, 0, 1));
}

TEST_CASE("histogram tv") {
  Rng rng(6);
  auto a = gaussian(2000, 1, 0.0, rng);
  CHECK(tv_hist(a, a, support_grid(a, a)) == 0.0);
  auto far = gaussian(2000, 1, 100.0, rng);
  CHECK(tv_hist(a, far, support_grid(a, far)) == 1.0);
  auto n0 = gaussian(100000, 1, 0.0, rng), n1 = gaussian(100000, 1, 0.5, rng);
  const double tv = tv_hist(n0, n1, support_grid(n0, n1, 100));
  CHECK(tv == doctest::Approx(2.0 * phi(0.25) - 1.0).epsilon(0.1));
  CHECK(std::abs(tv - (2.0 * phi(0.25) - 1.0)) < 0.02);
  CHECK_THROWS(tv_hist(Tensor::zeros({0, 1}), a, support_grid(a, a)));
}

TEST_CASE("tv and w2 are not comparable in general") {
  // Nearby point masses: TV is 1 while W2 is tiny.
  auto a = Tensor::from({2, 1}, {0.0, 0.0});
  auto b = Tensor::from({2, 1}, {1e-3, 1e-3});
  HistGrid g{{-1.0}, {1.0}, 100000};
  CHECK(tv_hist(a, b, g) == 1.0);
  CHECK(w2_exact(a, b) == doctest::Approx(1e-3));
}

TEST_CASE("mode mass gap") {
  std::vector<std::vector<double>> centers;
  for (int k = 0; k < 8; ++k) centers.push_back({std::cos(k * M_PI / 4), std::sin(k * M_PI / 4)});
  auto part = Partition::voronoi(centers);
  CHECK(part.cells() == 8);

  std::vector<double> uni, one;
  for (int i = 0; i < 800; ++i) {
    uni.push_back(centers[i % 8][0]);
    uni.push_back(centers[i % 8][1]);
    one.push_back(centers[3][0]);
    one.push_back(centers[3][1]);
  }
  auto U = Tensor::from({800, 2}, uni), O = Tensor::from({800, 2}, one);
  CHECK(mode_mass_gap(O, U, part) == doctest::Approx(0.875));
  CHECK(mode_mass_gap(U, U, part) == 0.0);

  Rng rng(7);
  std::vector<double> a, b;
  for (int i = 0; i < 4000; ++i) {
    for (auto* v : {&a, &b}) {
      const auto& c = centers[rng.index(8)];
      v->push_back(c[0] + 0.05 * rng.normal());
      v->push_back(c[1] + 0.05 * rng.normal());
    }
  }
  CHECK(mode_mass_gap(Tensor::from({4000, 2}, a), Tensor::from({4000, 2}, b), part) < 0.03);
}

TEST_CASE("partition assigns every point to exactly one cell") {
  auto p = Partition::intervals({1.0, 0.0}, {-1.0, 0.0, 1.0});
  CHECK(p.cells() == 4);
  double x0[2]{-5.0, 0.0}, x1[2]{-0.5, 9.0}, x2[2]{0.0, 0.0}, x3[2]{7.0, 0.0};
  CHECK(p.assign(x0) == 0);
  CHECK(p.assign(x1) == 1);
  CHECK(p.assign(x2) == 2);
  CHECK(p.assign(x3) == 3);
  Rng rng(8);
  auto s = gaussian(1000, 2, 0.0, rng);
  auto m = p.masses(s);
  double total = 0.0;
  for (double v : m) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  auto q = Partition::projection_quantiles(s, {0.0, 1.0}, 4);
  for (double v : q.masses(s)) CHECK(v == doctest::Approx(0.25).epsilon(0.01));
  CHECK_THROWS(Partition::intervals({1.0}, {1.0, 0.0}));
}

TEST_CASE("mode gap is bounded by tv on a shared binning") {
  Rng rng(9);
  auto a = gaussian(3000, 1, 0.0, rng), b = gaussian(3000, 1, 0.7, rng);
  HistGrid g{{-4.0}, {4.0}, 8};
  // Interval cells aligned with grid edges: coarser than the grid.
  auto part = Partition::intervals({1.0}, {-2.0, 0.0, 2.0});
  CHECK(mode_mass_gap(a, b, part) <= tv_hist(a, b, g) + 1e-12);
}

TEST_CASE("texture richness") {
  CHECK(texture_richness(patch(8, 8, [](auto, auto) { return 3.0; })) == 0.0);
  CHECK(texture_richness(patch(8, 8, [](auto r, auto c) { return (r + c) % 2 ? 1.0 : -1.0; })) == 8.0);
  CHECK(texture_richness(patch(8, 8, [](auto r, auto c) { return 0.5 * r - 2.0 * c + 1.0; })) ==
        doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK_THROWS(texture_richness(patch(2, 5, [](auto, auto) { return 0.0; })));

  Rng rng(10);
  auto v = rng.normals(100);
  auto base = Tensor::from({10, 10}, v);
  std::vector<double> shifted(v), scaled(v);
  for (auto& e : shifted) e += 4.0;
  for (auto& e : scaled) e *= 2.5;
  const double r = texture_richness(base);
  CHECK(texture_richness(Tensor::from({10, 10}, shifted)) == doctest::Approx(r).epsilon(1e-12));
  CHECK(texture_richness(Tensor::from({10, 10}, scaled)) == doctest::Approx(2.5 * r).epsilon(1e-12));
  CHECK(texture_richness(Tensor::from({1, 1, 10, 10}, v)) == r);
}

TEST_CASE("lemma bound") {
  CHECK(lemma_bound(3.0, 0.0) == 0.0);
  CHECK(lemma_bound(2.0, 0.1) == doctest::Approx(0.28284271).epsilon(1e-8));
  CHECK(lemma_bound(1.0, 1.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(lemma_bound(-1.0, 1.0), std::domain_error);
}

TEST_CASE("predicted steps") {
  auto tc = paper_constants();
  const double t = predicted_steps(tc);
  CHECK(t == doctest::Approx(8.05e3).epsilon(0.005));

  auto half = tc;
  half.eps0 /= 2.0;
  const double drop = 2.0 * std::log(2.0) / std::log(1.0 / (1.0 - tc.eta * tc.mu));
  CHECK(t - predicted_steps(half) == doctest::Approx(drop).epsilon(1e-10));

  auto done = tc;
  done.delta_tar = done.C2 * done.eps0 * done.eps0;
  CHECK(predicted_steps(done) == 0.0);

  auto more_eps = tc, less_tar = tc, more_mu = tc;
  more_eps.eps0 *= 1.5;
  less_tar.delta_tar /= 2.0;
  more_mu.mu *= 2.0;
  CHECK(predicted_steps(more_eps) > t);
  CHECK(predicted_steps(less_tar) > t);
  CHECK(predicted_steps(more_mu) < t);

  auto bad = tc;
  bad.eta = 1.0 / bad.mu;
  CHECK_THROWS_AS(predicted_steps(bad), std::domain_error);
  bad = tc;
  bad.C2 = 0.0;
  CHECK_THROWS_AS(predicted_steps(bad), std::domain_error);
}

TEST_CASE("gradient norms") {
  models::ParamStore p;
  p.add("a", Tensor::from({2}, {1.0, 1.0}, true));
  p.add("b", Tensor::from({1}, {1.0}, true));
  auto loss = ad::add(ad::sum(ad::mul(p.at("a"), Tensor::from({2}, {3.0, 4.0}))), ad::scale(ad::sum(p.at("b")), 0.0));
  ad::backward(loss);
  CHECK(grad_norm(p) == doctest::Approx(5.0));
  CHECK(combine_norms({3.0, 4.0}) == 5.0);
  CHECK(combine_norms({}) == 0.0);

  models::ParamStore q;
  q.add("c", Tensor::from({1}, {1.0}, true));
  CHECK_THROWS(grad_norm(q));
}

TEST_CASE("jacobian norm of a linear generator is the largest input norm") {
  Rng rng(11);
  models::ParamStore p;
  p.add("w", Tensor::from({3, 2}, rng.normals(6)));
  GeneratorFn gen = [](const models::ParamStore& ps, const Tensor& y) { return ad::matmul(y, ps.at("w")); };
  auto y = gaussian(6, 3, 0.0, rng);
  double biggest = 0.0;
  for (std::size_t i = 0; i < 6; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += y.at(i * 3 + j) * y.at(i * 3 + j);
    biggest = std::max(biggest, std::sqrt(s));
  }
  auto est = jacobian_norm_estimate(gen, p, y);
  CHECK(est.converged);
  CHECK(est.norm == doctest::Approx(biggest).epsilon(1e-5));
  REQUIRE(est.per_block.size() == 1);
  CHECK(est.per_block[0].first == "w");

  for (std::uint64_t seed : {1, 2, 3}) {
    CHECK(jacobian_norm_estimate(gen, p, y, 20, seed).norm == doctest::Approx(est.norm).epsilon(0.05));
  }
}

TEST_CASE("jacobian blocks behind a zeroed path report zero") {
  Rng rng(12);
  models::ParamStore p;
  p.add("w1", Tensor::from({2, 3}, rng.normals(6)));
  p.add("w2", Tensor::zeros({3, 2}));
  GeneratorFn gen = [](const models::ParamStore& ps, const Tensor& y) {
    return ad::matmul(ad::tanh(ad::matmul(y, ps.at("w1"))), ps.at("w2"));
  };
  auto est = jacobian_norm_estimate(gen, p, gaussian(4, 2, 0.5, rng));
  CHECK(est.per_block.size() == 2);
  for (const auto& [name, v] : est.per_block) {
    if (name == "w1") CHECK(v == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    else CHECK(v > 0.0);
  }
}
