#include "doctest.h"

#include "../support/gradcheck.hpp"
#include "gdvae/errors.hpp"

#include <cmath>
#include <random>

using namespace gdvae;
using namespace gdvae::diff;
using gdvae::testing::random_tensor;

TEST_CASE("tensor rejects mismatched value counts") {
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.reshaped({3, 2}).extent(0) == 3);
  CHECK_THROWS_AS(t.reshaped({4}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("affine: identity and bias-only cases") {
  Tape t;
  Var x = t.constant(Tensor::vector({3, -1}));
  Var I = t.constant(Tensor({2, 2}, {1, 0, 0, 1}));
  Var zero = t.constant(Tensor({2}, {0, 0}));
  Var y = affine(x, I, zero);
  CHECK(y.value()[0] == 3.0);
  CHECK(y.value()[1] == -1.0);

  Var Wz = t.constant(Tensor({2, 2}, 0.0));
  Var b = t.constant(Tensor({2}, {5, 5}));
  Var y2 = affine(t.constant(Tensor::vector({17, -4})), Wz, b);
  CHECK(y2.value()[0] == 5.0);
  CHECK(y2.value()[1] == 5.0);

  CHECK_THROWS_AS(affine(t.constant(Tensor::vector({1, 2, 3})), I, zero), ShapeError);
}

TEST_CASE("affine: gradient of sum((Wx+b)^2) matches central differences") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Parameter W("W", random_tensor({4, 3}, rng)), b("b", random_tensor({4}, rng));
    Tensor x = random_tensor({3}, rng);
    Tape t;
    Var loss = sum(square(affine(t.constant(x), t.parameter(W), t.parameter(b))));
    t.backward(loss);
    auto f = [&](const Tensor& w) {
      Tape tt;
      return sum(square(affine(tt.constant(x), tt.constant(w), tt.constant(b.value)))).value().item();
    };
    // quadratic in W: the central difference has no truncation error, so a wide step is exact
    CHECK(finite_difference_check(f, W.value, W.grad, 1e-3) < 1e-6);
  }
}

TEST_CASE("activation values and piecewise-linear derivatives") {
  Tape t;
  Parameter x("x", Tensor::vector({-1.0, 2.0, -2.0, 0.0}));
  Var xv = t.parameter(x);
  Var r = relu(xv);
  CHECK(r.value()[0] == 0.0);
  CHECK(r.value()[1] == 2.0);
  Var l = leaky_relu(xv, 1e-6);
  CHECK(l.value()[0] == doctest::Approx(-1e-6).epsilon(1e-12));
  t.backward(sum(l));
  CHECK(x.grad[1] == 1.0);
  CHECK(x.grad[2] == doctest::Approx(1e-6));
  // subgradient at the kink is the negative-side slope
  CHECK(x.grad[3] == doctest::Approx(1e-6));

  Tape t2;
  Parameter y("y", Tensor::vector({0.0, 3.0}));
  t2.backward(sum(relu(t2.parameter(y))));
  CHECK(y.grad[0] == 0.0);
  CHECK(y.grad[1] == 1.0);
}

TEST_CASE("conv2d: 1x1 kernel scales the input") {
  std::mt19937_64 rng(1);
  Tape t;
  Tensor x = random_tensor({1, 5, 6}, rng);
  Var y = conv2d(t.constant(x), t.constant(Tensor({1, 1, 1, 1}, {2.0})), std::nullopt, {1, 0});
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.value()[i] == 2.0 * x[i]);
}

TEST_CASE("conv2d: (2,10,3,3,1) on a 64x64 two-channel field gives 10x22x22") {
  std::mt19937_64 rng(2);
  Tape t;
  Var y = conv2d(t.constant(random_tensor({2, 64, 64}, rng)), t.constant(random_tensor({10, 2, 3, 3}, rng)),
                 t.constant(Tensor({10})), {3, 1});
  CHECK(y.shape() == Shape{10, 22, 22});
  CHECK_THROWS_AS(conv2d(t.constant(Tensor({1, 2, 2})), t.constant(Tensor({1, 1, 5, 5})), std::nullopt, {1, 0}),
                  ShapeError);
}

TEST_CASE("conv2d and tconv2d are adjoint for the brusselator layer geometries") {
  std::mt19937_64 rng(3);
  struct Layer {
    std::size_t cin, cout, k, s, p, h;
  };
  // encoder layers with their input extents
  const Layer layers[] = {{2, 10, 3, 3, 1, 64}, {10, 20, 3, 3, 1, 22}, {20, 40, 2, 2, 1, 8}, {40, 100, 5, 1, 0, 5}};
  for (const auto& L : layers) {
    for (int trial = 0; trial < 3; ++trial) {
      ConvGeometry g{L.s, L.p};
      Tensor x = random_tensor({2, L.cin, L.h, L.h}, rng);
      Tensor K = random_tensor({L.cout, L.cin, L.k, L.k}, rng);
      Tape t;
      Var cx = conv2d(t.constant(x), t.constant(K), std::nullopt, g);
      Tensor y = random_tensor(cx.shape(), rng);
      Var ty = tconv2d(t.constant(y), t.constant(K), std::nullopt, g);
      REQUIRE(ty.shape() == x.shape());
      const double lhs = dot(cx.value(), y), rhs = dot(x, ty.value());
      CHECK(std::abs(lhs - rhs) / std::abs(lhs) < 1e-10);
    }
  }
}

TEST_CASE("tconv2d: 1x1 kernel scales and the decoder stack reaches 2x64x64") {
  std::mt19937_64 rng(4);
  Tape t;
  Tensor x = random_tensor({1, 4, 4}, rng);
  Var y = tconv2d(t.constant(x), t.constant(Tensor({1, 1, 1, 1}, {3.0})), std::nullopt, {1, 0});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.value()[i] == 3.0 * x[i]);

  struct Layer {
    std::size_t cin, cout, k, s, p;
  };
  const Layer stack[] = {{100, 40, 5, 1, 0}, {40, 20, 2, 2, 1}, {20, 10, 3, 3, 1}, {10, 2, 3, 3, 1}};
  Var h = t.constant(random_tensor({3, 100, 1, 1}, rng));
  for (const auto& L : stack) {
    h = tconv2d(h, t.constant(random_tensor({L.cin, L.cout, L.k, L.k}, rng, 0.1)), t.constant(Tensor({L.cout})),
                {L.s, L.p});
  }
  CHECK(h.shape() == Shape{3, 2, 64, 64});
}

TEST_CASE("tconv2d gradient matches central differences to 1e-5") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    double err = gdvae::testing::op_gradient_error(
        [](Tape&, const std::vector<Var>& v) { return tconv2d(v[0], v[1], v[2], {2, 1}); },
        {random_tensor({2, 3, 3, 3}, rng), random_tensor({3, 2, 2, 2}, rng), random_tensor({2}, rng)}, rng);
    CHECK(err < 1e-5);
  }
}

TEST_CASE("custom_gradient: identity and doubling") {
  Parameter x("x", Tensor::vector({1.5, -2.0}));
  {
    Tape t;
    Var y = custom_gradient(t.parameter(x), [](const Tensor& in) {
      return std::pair<Tensor, VjpFn>{in, [](const Tensor& g) { return g; }};
    });
    t.backward(sum(mul(y, t.constant(Tensor::vector({3.0, 4.0})))));
    CHECK(x.grad[0] == 3.0);
    CHECK(x.grad[1] == 4.0);
  }
  x.zero_grad();
  {
    Tape t;
    Var y = custom_gradient(t.parameter(x), [](const Tensor& in) {
      Tensor out = in;
      for (auto& v : out.values()) v *= 2.0;
      return std::pair<Tensor, VjpFn>{out, [](const Tensor& g) {
                                        Tensor r = g;
                                        for (auto& v : r.values()) v *= 2.0;
                                        return r;
                                      }};
    });
    CHECK(y.value()[0] == 3.0);
    t.backward(sum(mul(y, t.constant(Tensor::vector({3.0, 4.0})))));
    CHECK(x.grad[0] == 6.0);
    CHECK(x.grad[1] == 8.0);
  }
  x.zero_grad();
  {
    Tape t;
    Var y = custom_gradient(t.parameter(x), [](const Tensor& in) {
      return std::pair<Tensor, VjpFn>{in, [](const Tensor&) { return Tensor(Shape{3}); }};
    });
    CHECK_THROWS_AS(t.backward(sum(y)), ShapeError);
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Parameter p("p", Tensor::vector({1.0, -2.0}));
  Parameter* ps[] = {&p};
  adam_step(ps, AdamConfig{});
  CHECK(p.value[0] == 1.0);
  CHECK(p.value[1] == -2.0);
}

TEST_CASE("adam: first step is lr * g / (|g| + eps) after bias correction") {
  Parameter p("p", Tensor::vector({1.0, 1.0}));
  p.grad = Tensor::vector({0.3, -5.0});
  Parameter* ps[] = {&p};
  AdamConfig cfg;
  adam_step(ps, cfg);
  CHECK(p.value[0] == doctest::Approx(1.0 - cfg.learning_rate * 0.3 / (0.3 + cfg.epsilon)).epsilon(1e-12));
  CHECK(p.value[1] == doctest::Approx(1.0 + cfg.learning_rate * 5.0 / (5.0 + cfg.epsilon)).epsilon(1e-12));
}

TEST_CASE("adam: non-finite gradient is rejected without updating") {
  Parameter p("p", Tensor::vector({1.0}));
  p.grad = Tensor::vector({std::nan("")});
  Parameter* ps[] = {&p};
  CHECK_THROWS_AS(adam_step(ps, AdamConfig{}), NonFiniteError);
  CHECK(p.value[0] == 1.0);
}

TEST_CASE("adam: 200 steps on |theta|^2 from (1,1) reach |theta| < 1e-2") {
  Parameter p("theta", Tensor::vector({1.0, 1.0}));
  Parameter* ps[] = {&p};
  AdamConfig cfg;
  cfg.learning_rate = 0.02;
  for (int i = 0; i < 200; ++i) {
    p.zero_grad();
    Tape t;
    t.backward(sum(square(t.parameter(p))));
    adam_step(ps, cfg);
  }
  CHECK(std::hypot(p.value[0], p.value[1]) < 1e-2);
}

TEST_CASE("finite_difference_check: x^2 at 3") {
  auto f = [](const Tensor& x) { return x[0] * x[0]; };
  CHECK(finite_difference_check(f, Tensor::vector({3.0}), Tensor::vector({6.0})) < 1e-8);
}

TEST_CASE("finite_difference_check: relu kink at a sample point is nudged away") {
  auto f = [](const Tensor& x) {
    Tape t;
    return sum(relu(t.constant(x))).value().item();
  };
  Tensor x = Tensor::vector({0.0, 1.0});
  diff::nudge_away_from_kinks(x, 1e-4);
  CHECK(x[0] == 1e-4);
  CHECK(finite_difference_check(f, x, Tensor::vector({1.0, 1.0})) < 1e-8);
}

TEST_CASE("every differentiable op passes 20 random finite-difference trials") {
  for (const auto& e : gdvae::testing::diffcore_gradient_suite(11, 20)) {
    INFO(e.name);
    CHECK(e.worst < 1e-4);
  }
}

TEST_CASE("backward is deterministic: identical seeds give identical gradients") {
  auto run_ok = [] {
    std::mt19937_64 rng(99);
    Parameter K("K", random_tensor({4, 2, 3, 3}, rng)), W("W", random_tensor({3, 4 * 16}, rng));
    Tape t;
    Var h = relu(conv2d(t.constant(random_tensor({2, 2, 7, 7}, rng)), t.parameter(K), std::nullopt, {2, 1}));
    t.backward(sum(square(affine(reshape(h, {2, 4 * 16}), t.parameter(W), std::nullopt))));
    std::vector<double> g(K.grad.values().begin(), K.grad.values().end());
    g.insert(g.end(), W.grad.values().begin(), W.grad.values().end());
    return g;
  };
  CHECK(run_ok() == run_ok());
}
