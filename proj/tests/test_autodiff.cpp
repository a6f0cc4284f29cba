#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"

#include "coadapt/autodiff.hpp"
#include "coadapt/mlp.hpp"
#include "coadapt/optimizer.hpp"
#include "gradcheck.hpp"

using namespace coadapt;
using coadapt::testing::max_relative_error;
using coadapt::testing::random_matrix;

TEST_CASE("forward: zero weights give squash(bias)") {
  std::mt19937_64 rng(3);
  Mlp net({3, 4, 2}, OutputActivation::kTanh, rng);
  for (auto& layer : net.layers()) layer.weight.mutable_value().setZero();
  net.layers().back().bias.mutable_value() << 0.3, -2.0;
  const Matrix out = net.forward(Var::constant(random_matrix(5, 3, rng))).value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    CHECK(out(r, 0) == doctest::Approx(std::tanh(0.3)));
    CHECK(out(r, 1) == doctest::Approx(std::tanh(-2.0)));
  }
}

TEST_CASE("forward: identity linear layer passes input through") {
  std::mt19937_64 rng(4);
  Mlp net({3, 3}, OutputActivation::kNone, rng);
  net.layers()[0].weight.mutable_value() = Matrix::Identity(3, 3);
  const Matrix v = random_matrix(2, 3, rng);
  CHECK((net.forward(Var::constant(v)).value() - v).norm() == 0.0);
}

TEST_CASE("forward: matches a hand-evaluated two-layer pass") {
  std::mt19937_64 rng(5);
  Mlp net({4, 6, 3}, OutputActivation::kTanh, rng);
  for (auto& layer : net.layers()) {
    layer.bias.mutable_value() = random_matrix(1, layer.bias.cols(), rng);
  }
  const Matrix input = random_matrix(1, 4, rng);
  const Matrix& w0 = net.layers()[0].weight.value();
  const Matrix& b0 = net.layers()[0].bias.value();
  const Matrix& w1 = net.layers()[1].weight.value();
  const Matrix& b1 = net.layers()[1].bias.value();
  std::vector<double> hidden(6), expected(3);
  for (int j = 0; j < 6; ++j) {
    double acc = b0(0, j);
    for (int i = 0; i < 4; ++i) acc += input(0, i) * w0(i, j);
    hidden[j] = std::tanh(acc);
  }
  for (int j = 0; j < 3; ++j) {
    double acc = b1(0, j);
    for (int i = 0; i < 6; ++i) acc += hidden[i] * w1(i, j);
    expected[j] = std::tanh(acc);
  }
  const Matrix out = net.forward(Var::constant(input)).value();
  const Matrix fast = net.evaluate(input);
  for (int j = 0; j < 3; ++j) {
    CHECK(out(0, j) == doctest::Approx(expected[j]).epsilon(1e-14));
    CHECK(fast(0, j) == doctest::Approx(expected[j]).epsilon(1e-14));
  }
}

TEST_CASE("forward: shape mismatch is a usage error") {
  std::mt19937_64 rng(6);
  Mlp net({3, 2}, OutputActivation::kNone, rng);
  CHECK_THROWS_AS(net.forward(Var::constant(Matrix::Zero(1, 4))), UsageError);
}

TEST_CASE("backward: sum of squares gives 2p") {
  std::mt19937_64 rng(7);
  Var p = Var::parameter(random_matrix(3, 2, rng), "p");
  sum(square(p)).backward();
  CHECK((p.grad() - 2.0 * p.value()).norm() < 1e-15);
}

TEST_CASE("backward: constant root leaves gradients at zero") {
  std::mt19937_64 rng(8);
  Var p = Var::parameter(random_matrix(2, 2, rng), "p");
  Var root = sum(Var::constant(Matrix::Ones(2, 2)));
  root.backward();
  CHECK(p.grad().norm() == 0.0);
}

TEST_CASE("backward: non-scalar root is a usage error") {
  Var p = Var::parameter(Matrix::Ones(2, 2), "p");
  CHECK_THROWS_AS(square(p).backward(), UsageError);
}

TEST_CASE("backward: every primitive matches central differences") {
  std::mt19937_64 rng(9);
  const Matrix a0 = random_matrix(4, 3, rng);
  const Matrix b0 = random_matrix(4, 3, rng);
  const Matrix w0 = random_matrix(3, 5, rng);
  const Matrix r0 = random_matrix(1, 3, rng);
  const Matrix c0 = random_matrix(4, 1, rng);

  using Builder = std::function<Var(const Var&)>;
  const std::vector<std::pair<const char*, Builder>> cases = {
      {"add", [&](const Var& a) { return sum(square(a + Var::constant(b0))); }},
      {"sub", [&](const Var& a) { return sum(square(Var::constant(b0) - a)); }},
      {"neg", [&](const Var& a) { return sum(hadamard(-a, Var::constant(b0))); }},
      {"scale", [&](const Var& a) { return sum(square(2.5 * a)); }},
      {"hadamard", [&](const Var& a) { return sum(hadamard(a, square(a))); }},
      {"matmul", [&](const Var& a) { return sum(tanh(matmul(a, Var::constant(w0)))); }},
      {"add_row", [&](const Var& a) { return sum(square(add_row(a, Var::constant(r0)))); }},
      {"scale_rows", [&](const Var& a) { return sum(square(scale_rows(a, Var::constant(c0)))); }},
      {"tanh", [&](const Var& a) { return sum(tanh(a)); }},
      {"sigmoid", [&](const Var& a) { return sum(sigmoid(3.0 * a)); }},
      {"exp", [&](const Var& a) { return sum(exp(a)); }},
      {"clamp", [&](const Var& a) { return sum(square(clamp(a, -0.5, 0.5))); }},
      {"row_sum", [&](const Var& a) { return sum(square(row_sum(a))); }},
      {"concat", [&](const Var& a) { return sum(square(concat_cols({a, tanh(a)}))); }},
      {"slice", [&](const Var& a) { return sum(square(slice_cols(a, 1, 2))); }},
  };
  for (const auto& [name, build] : cases) {
    CAPTURE(name);
    CHECK(max_relative_error(a0, build) < 1e-4);
  }
}

TEST_CASE("backward: gradient reaches the bias and scale of composite ops") {
  std::mt19937_64 rng(10);
  const Matrix x = random_matrix(4, 3, rng);
  const Matrix c = random_matrix(4, 1, rng);
  auto on_bias = [&](const Var& b) {
    return sum(tanh(add_row(Var::constant(x), b)));
  };
  CHECK(max_relative_error(random_matrix(1, 3, rng), on_bias) < 1e-4);
  auto on_scale = [&](const Var& s) {
    return sum(square(scale_rows(Var::constant(x), s)));
  };
  CHECK(max_relative_error(c, on_scale) < 1e-4);
}

TEST_CASE("backward: shared subexpressions are visited once") {
  Var p = Var::parameter(Matrix::Constant(1, 1, 3.0), "p");
  Var q = square(p);
  Var root = sum(q + q);  // d/dp 2p^2 = 4p
  root.backward();
  CHECK(p.grad()(0, 0) == doctest::Approx(12.0));
  // A second backward on a fresh graph accumulates into the parameter.
  sum(q + q).backward();
  CHECK(p.grad()(0, 0) == doctest::Approx(24.0));
}

TEST_CASE("mlp gradients with constant weights flow only to the input") {
  std::mt19937_64 rng(11);
  Mlp net({3, 5, 2}, OutputActivation::kTanh, rng);
  Var input = Var::parameter(random_matrix(2, 3, rng), "input");
  sum(square(net.forward(input, ParamUse::kConstant))).backward();
  for (const auto& p : net.parameters()) CHECK(p.grad().norm() == 0.0);
  CHECK(input.grad().norm() > 0.0);
}

TEST_CASE("determinism: same seed, same forward and gradients") {
  auto run = [] {
    std::mt19937_64 rng(12);
    Mlp net({3, 8, 2}, OutputActivation::kTanh, rng);
    const Matrix x = random_matrix(4, 3, rng);
    sum(square(net.forward(Var::constant(x)))).backward();
    std::vector<double> out;
    for (const auto& p : net.parameters()) {
      out.insert(out.end(), p.grad().data(), p.grad().data() + p.grad().size());
    }
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("optimizer: zero gradients leave parameters unchanged") {
  Var p = Var::parameter(Matrix::Constant(2, 2, 1.5), "p");
  Optimizer opt({p}, {});
  opt.step();
  CHECK((p.value().array() == 1.5).all());
  CHECK(opt.steps() == 1);
}

TEST_CASE("optimizer: plain gradient descent takes p - lr g") {
  Var p = Var::parameter(Matrix::Constant(1, 2, 1.0), "p");
  Optimizer opt({p}, OptimizerConfig{.rule = UpdateRule::kSgd, .learning_rate = 0.1});
  p.mutable_grad() << 2.0, -4.0;
  opt.step();
  CHECK(p.value()(0, 0) == doctest::Approx(0.8));
  CHECK(p.value()(0, 1) == doctest::Approx(1.4));
  CHECK(p.grad().norm() == 0.0);
}

TEST_CASE("optimizer: converges on a quadratic bowl") {
  Matrix target(1, 3);
  target << 0.7, -1.2, 0.1;
  Var p = Var::parameter(Matrix::Zero(1, 3), "p");
  Optimizer opt({p}, OptimizerConfig{.rule = UpdateRule::kSgd, .learning_rate = 0.1});
  for (int i = 0; i < 50; ++i) {
    squared_error(p, Var::constant(target)).backward();
    opt.step();
  }
  // Analytic minimizer is the target; each SGD step shrinks the error by 0.8.
  CHECK((p.value() - target).norm() < 1e-3);

  Var q = Var::parameter(Matrix::Zero(1, 3), "q");
  Optimizer adam({q}, OptimizerConfig{.learning_rate = 0.05});
  for (int i = 0; i < 400; ++i) {
    squared_error(q, Var::constant(target)).backward();
    adam.step();
  }
  CHECK((q.value() - target).norm() < 1e-2);
}

TEST_CASE("optimizer: non-finite gradient names the parameter") {
  Var p = Var::parameter(Matrix::Zero(1, 1), "policy.layer0.weight");
  Optimizer opt({p}, {});
  p.mutable_grad()(0, 0) = std::nan("");
  try {
    opt.step();
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("policy.layer0.weight") != std::string::npos);
  }
  CHECK(p.value()(0, 0) == 0.0);
}
