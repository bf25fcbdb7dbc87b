#pragma once

// Finite-difference harness shared by the unit and acceptance suites.

#include "gdvae/diffcore/ops.hpp"
#include "gdvae/diffcore/optim.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace gdvae::testing {

using diff::Parameter;
using diff::Shape;
using diff::Tape;
using diff::Tensor;
using diff::Var;

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = n(rng);
  return t;
}

/// Builds the op under test from its inputs.
using OpBuilder = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Max relative error between tape gradients and central differences of
/// L = <R, op(inputs)> (R random, fixed), over every input coordinate.
inline double op_gradient_error(const OpBuilder& build, const std::vector<Tensor>& inputs, std::mt19937_64& rng,
                                double h = 1e-6, double floor = 1e-6) {
  std::vector<Parameter> params;
  params.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace_back("in" + std::to_string(i), inputs[i]);

  Tensor weights;
  {
    Tape probe;
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(probe.parameter(p));
    weights = random_tensor(build(probe, vars).shape(), rng);
  }

  auto loss_of = [&](const std::vector<Tensor>& values) {
    Tape t;
    std::vector<Var> vars;
    for (const auto& v : values) vars.push_back(t.constant(v));
    return diff::dot(build(t, vars).value(), weights);
  };

  Tape t;
  std::vector<Var> vars;
  for (auto& p : params) vars.push_back(t.parameter(p));
  Var out = build(t, vars);
  t.backward(diff::sum(diff::mul(out, t.constant(weights))));

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Tensor& xi) {
      std::vector<Tensor> values = inputs;
      values[i] = xi;
      return loss_of(values);
    };
    worst = std::max(worst, diff::finite_difference_check(f, inputs[i], params[i].grad, h, floor));
  }
  return worst;
}

struct GradSuiteEntry {
  std::string name;
  int trials = 0;
  double worst = 0.0;
};

/// Runs every differentiable diffcore op through `trials` random finite-difference checks.
inline std::vector<GradSuiteEntry> diffcore_gradient_suite(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> small(1, 4);
  std::vector<GradSuiteEntry> out;
  auto run = [&](const std::string& name, const std::function<double()>& trial) {
    GradSuiteEntry e{name, trials, 0.0};
    for (int i = 0; i < trials; ++i) e.worst = std::max(e.worst, trial());
    out.push_back(e);
  };

  run("affine", [&] {
    const std::size_t b = small(rng), in = small(rng) + 2, o = small(rng) + 1;
    return op_gradient_error([](Tape&, const std::vector<Var>& v) { return diff::affine(v[0], v[1], v[2]); },
                             {random_tensor({b, in}, rng), random_tensor({o, in}, rng), random_tensor({o}, rng)}, rng);
  });
  run("relu", [&] {
    Tensor x = random_tensor({static_cast<std::size_t>(small(rng)), 6}, rng);
    diff::nudge_away_from_kinks(x, 1e-3);
    return op_gradient_error([](Tape&, const std::vector<Var>& v) { return diff::relu(v[0]); }, {x}, rng);
  });
  run("leaky_relu", [&] {
    Tensor x = random_tensor({static_cast<std::size_t>(small(rng)), 6}, rng);
    diff::nudge_away_from_kinks(x, 1e-3);
    return op_gradient_error([](Tape&, const std::vector<Var>& v) { return diff::leaky_relu(v[0], 0.1); }, {x}, rng);
  });
  run("conv2d", [&] {
    const std::size_t stride = static_cast<std::size_t>(small(rng) % 3 + 1), pad = static_cast<std::size_t>(small(rng) % 2);
    const std::size_t k = 3, h = 7;
    diff::ConvGeometry g{stride, pad};
    return op_gradient_error(
        [g](Tape&, const std::vector<Var>& v) { return diff::conv2d(v[0], v[1], v[2], g); },
        {random_tensor({2, 2, h, h}, rng), random_tensor({3, 2, k, k}, rng), random_tensor({3}, rng)}, rng);
  });
  run("tconv2d", [&] {
    const std::size_t stride = static_cast<std::size_t>(small(rng) % 3 + 1), pad = static_cast<std::size_t>(small(rng) % 2);
    diff::ConvGeometry g{stride, pad};
    return op_gradient_error(
        [g](Tape&, const std::vector<Var>& v) { return diff::tconv2d(v[0], v[1], v[2], g); },
        {random_tensor({2, 3, 4, 4}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({2}, rng)}, rng);
  });
  run("add_sub_mul", [&] {
    const std::size_t n = small(rng) + 2;
    return op_gradient_error(
        [](Tape&, const std::vector<Var>& v) { return diff::mul(diff::add(v[0], v[1]), diff::sub(v[0], v[1])); },
        {random_tensor({n, 3}, rng), random_tensor({n, 3}, rng)}, rng);
  });
  run("scale_exp_square", [&] {
    return op_gradient_error(
        [](Tape&, const std::vector<Var>& v) { return diff::square(diff::exp(diff::scale(v[0], 0.5))); },
        {random_tensor({3, 4}, rng, 0.5)}, rng);
  });
  run("sum_reshape_select", [&] {
    return op_gradient_error(
        [](Tape&, const std::vector<Var>& v) {
          Var r = diff::reshape(v[0], {4, 3});
          return diff::add(diff::select_columns(r, {2, 0}), diff::scale(diff::select_columns(r, {1, 1}), 2.0));
        },
        {random_tensor({12}, rng)}, rng);
  });
  run("linear_map", [&] {
    diff::RowMatrix M = diff::RowMatrix::Random(2, 3);
    Eigen::VectorXd off = Eigen::VectorXd::Random(2);
    return op_gradient_error([M, off](Tape&, const std::vector<Var>& v) { return diff::linear_map(v[0], M, off); },
                             {random_tensor({5, 3}, rng)}, rng);
  });
  return out;
}

}  // namespace gdvae::testing
