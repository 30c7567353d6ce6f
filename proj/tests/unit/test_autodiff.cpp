#include <doctest.h>

#include <cmath>
#include <cstring>

#include "hypirb/autodiff/grad_check.hpp"
#include "hypirb/autodiff/ops.hpp"
#include "hypirb/util/rng.hpp"

using namespace hypirb;
using namespace hypirb::ad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& e : v) e = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

// Weighted sum so every output coordinate gets a distinct upstream gradient.
Tensor probe_sum(const Tensor& y) {
  std::vector<double> w(y.numel());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
  return sum(mul(y, Tensor::from(y.shape(), w)));
}

double check_many(const ScalarFn& f, Shape shape, double lo = -2.0, double hi = 2.0) {
  Rng rng(17);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) worst = std::max(worst, grad_check(f, random_tensor(shape, rng, lo, hi), 1e-5));
  return worst;
}

}  // namespace

TEST_CASE("mul of scalars") {
  auto a = Tensor::from({1}, {2.0});
  auto b = Tensor::from({1}, {3.0});
  CHECK(mul(a, b).item() == 6.0);
}

TEST_CASE("matmul by identity") {
  Rng rng(1);
  auto a = random_tensor({3, 5}, rng);
  auto eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto c = matmul(eye, a);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(c.at(i) == a.at(i));
}

TEST_CASE("conv2d laplacian on checkerboard") {
  std::vector<double> v(16);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) v[y * 4 + x] = ((x + y) % 2 == 0) ? 1.0 : -1.0;
  auto img = Tensor::from({1, 1, 4, 4}, v);
  auto lap = Tensor::from({1, 1, 3, 3}, {0, 1, 0, 1, -4, 1, 0, 1, 0});
  auto out = conv2d(img, lap);
  for (std::size_t y = 1; y < 3; ++y)
    for (std::size_t x = 1; x < 3; ++x) CHECK(std::abs(out.at(y * 4 + x)) == 8.0);
}

TEST_CASE("product rule gradients") {
  auto x = Tensor::scalar(2.0, true);
  auto y = Tensor::scalar(3.0, true);
  backward(mul(x, y));
  CHECK(x.grad()[0] == 3.0);
  CHECK(y.grad()[0] == 2.0);
}

TEST_CASE("mean of squares gradient") {
  auto x = Tensor::from({3}, {1, 2, 3}, true);
  backward(mean(mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(x.grad()[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(x.grad()[2] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("relu gate gradient") {
  auto x = Tensor::from({2}, {-1, 5}, true);
  backward(sum(relu(x)));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
}

TEST_CASE("backward errors") {
  auto x = Tensor::from({2}, {1, 2}, true);
  CHECK_THROWS_AS(backward(scale(x, 2.0)), ShapeError);
  auto c = Tensor::from({1}, {1.0});
  CHECK_THROWS_AS(backward(scale(c, 2.0)), GraphError);
}

TEST_CASE("shape and domain errors name the primitive") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({2, 2});
  try {
    (void)add(a, b);
    FAIL("expected throw");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("add") != std::string::npos);
    CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
  }
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(log(Tensor::from({2}, {1.0, 0.0})), DomainError);
  CHECK_THROWS_AS(exp(Tensor::from({1}, {1000.0})), DomainError);
  CHECK_THROWS_AS(Tensor::zeros({0, 2}), ShapeError);
}

TEST_CASE("grad_check trivial oracles") {
  CHECK(grad_check([](const Tensor& x) { return mul(x, x); }, Tensor::scalar(3.0), 1e-5) < 1e-9);
  Rng rng(3);
  CHECK(grad_check([](const Tensor& x) { return sum(x); }, random_tensor({4, 3}, rng), 1e-3) < 1e-12);
}

TEST_CASE("every primitive passes grad_check at 20 points") {
  Rng wr(5);
  const auto w23 = random_tensor({2, 3}, wr);
  const auto k = random_tensor({3, 2, 3, 3}, wr);
  const auto bias = random_tensor({3}, wr);
  const auto bias_ns = random_tensor({2, 3}, wr);

  CHECK(check_many([&](const Tensor& x) { return probe_sum(add(x, w23)); }, {2, 3}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return probe_sum(sub(w23, x)); }, {2, 3}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return probe_sum(mul(x, x)); }, {2, 3}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(scale(x, -1.7)); }, {4}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(add_scalar(x, 0.4)); }, {4}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return probe_sum(matmul(x, transpose(w23))); }, {4, 3}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return probe_sum(matmul(w23, x)); }, {3, 2}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(transpose(x)); }, {2, 5}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return probe_sum(bias_add(x, bias)); }, {2, 3, 4}) < 1e-6);
  CHECK(check_many([&](const Tensor& b) { return probe_sum(mul(bias_add(w23, b), w23)); }, {3}) < 1e-6);
  CHECK(check_many([&](const Tensor& b) {
          Tensor img = reshape(concat({w23, w23}, 1), {2, 3, 2});
          return probe_sum(mul(bias_add(img, b), img));
        },
        {2, 3}) < 1e-6);
  (void)bias_ns;
  CHECK(check_many([&](const Tensor& x) { return probe_sum(conv2d(x, k)); }, {2, 2, 4, 5}) < 1e-6);
  CHECK(check_many([&](const Tensor& w) {
          Rng r(9);
          return probe_sum(conv2d(random_tensor({2, 2, 4, 4}, r), w));
        },
        {3, 2, 3, 3}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(relu(x)); }, {6}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(tanh(x)); }, {6}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(silu(x)); }, {6}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(sigmoid(x)); }, {6}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(softplus(x)); }, {6}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(exp(x)); }, {6}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(log(x)); }, {6}, 0.2, 3.0) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return sum(mul(x, x)); }, {3, 2}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return mean(mul(x, x)); }, {3, 2}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(mean_last(mul(x, x))); }, {2, 3, 4}) < 1e-6);
  CHECK(check_many([](const Tensor& x) { return probe_sum(reshape(mul(x, x), {3, 2})); }, {2, 3}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return probe_sum(concat({x, mul(x, x)}, 0)); }, {2, 3}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return probe_sum(concat({w23, x}, 1)); }, {2, 2}) < 1e-6);
  CHECK(check_many([&](const Tensor& x) { return mse(x, w23); }, {2, 3}) < 1e-6);
}

TEST_CASE("per-sample bias gradient") {
  Rng wr(8);
  const auto x = random_tensor({2, 3, 4}, wr);
  CHECK(check_many([&](const Tensor& b) { return probe_sum(mul(bias_add(x, b), x)); }, {2, 3}) < 1e-6);
}

TEST_CASE("fan-out gradients accumulate") {
  Rng rng(11);
  auto base = random_tensor({5}, rng);
  auto f = [](const Tensor& x) { return sum(tanh(x)); };
  auto g = [](const Tensor& x) { return mean(mul(x, x)); };
  auto x1 = base.clone(true);
  backward(add(f(x1), g(x1)));
  auto x2 = base.clone(true);
  backward(f(x2));
  auto x3 = base.clone(true);
  backward(g(x3));
  for (std::size_t i = 0; i < 5; ++i) CHECK(x1.grad()[i] == doctest::Approx(x2.grad()[i] + x3.grad()[i]).epsilon(1e-14));
}

TEST_CASE("backward is bit-deterministic") {
  Rng rng(2);
  auto x = random_tensor({4, 3}, rng);
  auto w = random_tensor({3, 3}, rng);
  auto run = [&] {
    auto p = x.clone(true);
    backward(mean(silu(matmul(p, w))));
    return std::vector<double>(p.grad().begin(), p.grad().end());
  };
  auto a = run();
  auto b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("tape is topologically ordered") {
  auto x = Tensor::from({2}, {1, 2}, true);
  auto y = tanh(x);
  auto z = sum(mul(y, y));
  auto tape = tape_of(z);
  REQUIRE(tape.size() == 3);
  CHECK(std::string(tape[0]->op) == "tanh");
  CHECK(std::string(tape[1]->op) == "mul");
  CHECK(std::string(tape[2]->op) == "sum");
}

TEST_CASE("no-grad guard suppresses recording") {
  auto x = Tensor::from({2}, {1, 2}, true);
  {
    NoGradGuard g;
    auto y = scale(x, 2.0);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.is_leaf());
  }
  CHECK(scale(x, 2.0).requires_grad());
}
