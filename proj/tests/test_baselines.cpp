#include <cmath>
#include <random>

#include "doctest.h"

#include "coadapt/agents.hpp"
#include "coadapt/baselines.hpp"

using namespace coadapt;

TEST_CASE("linear interface: affine map of scaled inputs, clamped") {
  TreasureEnv env(2);
  Matrix a(2, 4);
  a << 1, 0, 0, 0,
       0, 0, 5, 5;
  LinearInterface lin(env, a);
  State s(2);
  s << 3, -4;
  HiddenInfo theta(2);
  theta << 8, 6;
  const Signal x = lin.emit_signal(s, theta);
  CHECK(x[0] == doctest::Approx(0.3));
  CHECK(x[1] == 1.0);  // 5 * 0.8 + 5 * 0.6 = 7 clamps to 1
  CHECK(LinearInterface::parameter_count(TreasureEnv(3)) == 18);
  CHECK_THROWS_AS(LinearInterface(env, Matrix::Zero(2, 3)), UsageError);
}

TEST_CASE("gp: posterior matches the closed form on three points") {
  Matrix x(3, 1);
  x << -0.5, 0.1, 0.7;
  Vector y(3);
  y << 1.0, -2.0, 0.5;
  GaussianProcess gp(0.5, 1e-2);
  REQUIRE(gp.fit(x, y));

  // Direct dense formulas on standardized targets.
  const double m = y.mean();
  const double sd = std::sqrt((y.array() - m).square().sum() / 2.0);
  auto k = [](double a, double b) { return std::exp(-0.5 * (a - b) * (a - b) / 0.25); };
  Matrix K(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K(i, j) = k(x(i, 0), x(j, 0)) + (i == j ? 1e-2 : 0.0);
  const Matrix Kinv = K.inverse();
  const Vector z = (y.array() - m) / sd;
  for (double q : {-0.5, 0.0, 0.4, 1.3}) {
    Vector kq(3);
    for (int i = 0; i < 3; ++i) kq[i] = k(x(i, 0), q);
    const double mean = m + sd * kq.dot(Kinv * z);
    const double var = sd * sd * (1.0 - kq.dot(Kinv * kq));
    Vector at(1);
    at << q;
    const auto [gm, gv] = gp.predict(at);
    CHECK(gm == doctest::Approx(mean).epsilon(1e-10));
    CHECK(gv == doctest::Approx(var).epsilon(1e-8));
  }
  // Interpolation within the noise level.
  for (int i = 0; i < 3; ++i) {
    Vector at(1);
    at << x(i, 0);
    CHECK(std::abs(gp.predict(at).first - y[i]) < 0.05 * sd);
  }
}

TEST_CASE("gp: duplicate observations interpolate their value") {
  BayesOptimizer bo(2);
  Vector p(2);
  p << 0.2, -0.4;
  Vector q(2);
  q << -0.8, 0.9;
  bo.observe(p, -1.5);
  bo.observe(p, -1.5);
  bo.observe(q, -3.0);
  CHECK(bo.surrogate().predict(p).first == doctest::Approx(-1.5).epsilon(0.02));
}

TEST_CASE("bayes: cold start is uniform in the box") {
  BayesOptimizer bo(3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) CHECK((bo.propose(rng).array().abs() <= 1.0).all());
  CHECK(bo.observations() == 0);
}

TEST_CASE("bayes: finds the 1D optimum and never leaves the box") {
  BayesOptimizer bo(1);
  std::mt19937_64 rng(2);
  double running_best = -1e300;
  for (int i = 0; i < 40; ++i) {
    const Vector a = bo.propose(rng);
    CHECK(std::abs(a[0]) <= 1.0);
    REQUIRE(bo.observe(a, -(a[0] - 0.3) * (a[0] - 0.3)));
    CHECK(bo.best_reward() >= running_best);
    running_best = bo.best_reward();
  }
  CHECK(bo.observations() == 40);
  CHECK(std::abs(bo.best_point()[0] - 0.3) < 0.1);
  double max_reward = -1e300;
  for (double r : bo.rewards()) max_reward = std::max(max_reward, r);
  CHECK(bo.best_reward() == max_reward);
}

TEST_CASE("bayes: non-finite rewards are rejected") {
  BayesOptimizer bo(2);
  CHECK_FALSE(bo.observe(Vector::Zero(2), std::nan("")));
  CHECK_FALSE(bo.observe(Vector::Zero(2), INFINITY));
  CHECK(bo.observations() == 0);
}

TEST_CASE("bayes: history cap keeps the surrogate to the newest points") {
  BayesConfig c;
  c.max_history = 10;
  BayesOptimizer bo(1, c);
  for (int i = 0; i < 30; ++i) bo.observe(Vector::Constant(1, -1.0 + i / 15.0), i < 20 ? 5.0 : 0.0);
  // Points 0..19 (reward 5) are outside the window; the surrogate sees only zeros.
  CHECK(std::abs(bo.surrogate().predict(Vector::Constant(1, -1.0)).first) < 1e-9);
  CHECK(bo.best_reward() == 5.0);
}

TEST_CASE("prior-only convex interface is antisymmetric on held-out samples") {
  TreasureEnv env(3);
  const InterfacePolicy conv =
      prior_only_interface(env, PriorKind::kConvexity, {}, {}, -0.5, 3);
  std::mt19937_64 rng(4);
  CHECK(antisymmetry_residual(conv, env, rng) < 0.1);
  const InterfacePolicy other =
      prior_only_interface(env, PriorKind::kConvexity, {}, {}, -0.5, 5);
  CHECK(other.evaluate(Matrix::Ones(1, 3), Matrix::Ones(1, 3)) !=
        conv.evaluate(Matrix::Ones(1, 3), Matrix::Ones(1, 3)));
  CHECK_THROWS_AS(prior_only_interface(env, PriorKind::kNone, {}, {}, -0.5, 3), UsageError);
}

TEST_CASE("prior-only agents are frozen across interactions") {
  TreasureEnv env(2);
  AgentSettings settings;
  settings.sizes = {{16, 16}, {16, 16}, {16, 16}};
  auto agent = make_agent(Algorithm::kProp, env, settings, 6);
  const auto before = agent->flat_weights();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5; ++i) {
    auto [s, theta] = env.reset(rng);
    Episode e{theta, {}};
    agent->finish_interaction(e, 1.0);
  }
  CHECK(agent->flat_weights() == before);
}

TEST_CASE("limit configuration") {
  const LossWeights w = limit_config();
  CHECK(w.lambda1 == 0.0);
  CHECK(w.lambda2 == 1.0);
  CHECK(w.lambda3 == 1.0);
  CHECK(w.prior == PriorKind::kNone);
  CHECK(w.k == 10);
}

TEST_CASE("algorithm pairing avoids the human's pretraining structure") {
  for (Algorithm a : all_algorithms()) {
    CAPTURE(to_string(a));
    CHECK(algorithm_from_string(to_string(a)) == a);
    const auto own = own_structure(a);
    if (own) CHECK(default_human_structure(a) != *own);
  }
  CHECK(default_human_structure(Algorithm::kBayes) == HumanStructure::kProportional);
  CHECK(default_human_structure(Algorithm::kOursC) == HumanStructure::kBayesLinear);
  CHECK(effective_weights(Algorithm::kLimit, {}).lambda1 == 0.0);
  CHECK(effective_weights(Algorithm::kOursC, {}).prior == PriorKind::kConvexity);
  CHECK(effective_weights(Algorithm::kOursP, {}).prior == PriorKind::kProportionality);
}

TEST_CASE("bayes agent logs one row per interaction and rewards are negated metrics") {
  TreasureEnv env(2);
  auto agent = make_agent(Algorithm::kBayes, env, {}, 8);
  auto* bayes = dynamic_cast<BayesAgent*>(agent.get());
  REQUIRE(bayes);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 3; ++i) {
    auto [s, theta] = env.reset(rng);
    const Signal x = agent->signal(s, theta);
    CHECK((x.array().abs() <= 1.0).all());
    agent->finish_interaction(Episode{theta, {}}, 4.0 + i);
  }
  REQUIRE(bayes->log().size() == 3);
  CHECK(bayes->log()[2].reward == -6.0);
  CHECK(bayes->optimizer().best_reward() == -4.0);
  const std::string csv = bayes_log_csv(bayes->log());
  CHECK(std::count(csv.begin(), csv.end(), '\n') >= 3);
}
