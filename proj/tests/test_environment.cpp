#include <map>
#include <random>

#include "doctest.h"

#include "coadapt/environment.hpp"

using namespace coadapt;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Episode oracle_episode(const Environment& env, std::mt19937_64& rng) {
  auto [s, theta] = env.reset(rng);
  Episode episode{theta, {}};
  for (int t = 0; t < env.horizon(); ++t) {
    const Action a = env.optimal_action(s, theta);
    const double u = env.robot_action(theta, s);
    State next = env.transition(s, a, u);
    episode.steps.push_back({s, a, Signal(), u, next});
    s = next;
  }
  return episode;
}

Episode random_episode(const Environment& env, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-env.action_bound(), env.action_bound());
  auto [s, theta] = env.reset(rng);
  Episode episode{theta, {}};
  for (int t = 0; t < env.horizon(); ++t) {
    Action a(env.action_dim());
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = u(rng);
    const double r = env.robot_action(theta, s);
    State next = env.transition(s, a, r);
    episode.steps.push_back({s, a, Signal(), r, next});
    s = next;
  }
  return episode;
}

}  // namespace

TEST_CASE("treasure: sampling stays in bounds") {
  TreasureEnv env(3);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto [s, theta] = env.reset(rng);
    CHECK(s.size() == 3);
    CHECK((s.array().abs() <= 10.0).all());
    CHECK((theta.array().abs() <= 10.0).all());
  }
}

TEST_CASE("treasure: dynamics are additive and clamped") {
  TreasureEnv env(3);
  CHECK(env.transition(vec({0, 0, 0}), vec({1, -1, 0}), 0.0) == vec({1, -1, 0}));
  CHECK(env.transition(vec({10, 10, 10}), vec({2, 2, 2}), 0.0) == vec({10, 10, 10}));
  const auto before = env.clamp_events();
  CHECK(env.transition(vec({0, 0, 0}), vec({5, -3, 0}), 0.0) == vec({2, -2, 0}));
  CHECK(env.clamp_events() == before + 1);
  CHECK_THROWS_AS(env.transition(vec({0, 0, 0}), vec({0, 0}), 0.0), UsageError);
}

TEST_CASE("treasure: oracle action and metric") {
  TreasureEnv env(3);
  CHECK(env.optimal_action(vec({0, 0, 0}), vec({5, -5, 1})) == vec({2, -2, 1}));
  Episode e{vec({1, 2, 3}), {}};
  CHECK_THROWS_AS(env.metric(e), UsageError);
  for (int t = 0; t < 10; ++t) e.steps.push_back({vec({1, 2, 3}), vec({0, 0, 0}), {}, 0, vec({1, 2, 3})});
  CHECK(env.metric(e) == 0.0);
  e.steps.back().next = vec({0, 0, 0});
  CHECK(env.metric(e) == doctest::Approx(14.0));
}

TEST_CASE("treasure: oracle reaches every goal within the horizon") {
  TreasureEnv env(3);
  std::mt19937_64 rng(2);
  double oracle_total = 0.0, random_total = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double m = env.metric(oracle_episode(env, rng));
    CHECK(m == doctest::Approx(0.0).epsilon(1e-24));
    oracle_total += m;
    random_total += env.metric(random_episode(env, rng));
  }
  CHECK(oracle_total < random_total);
  // Corner to corner is 20 units: exactly 10 steps of 2.
  Episode far{vec({10, -10, 10}), {}};
  State s = vec({-10, 10, -10});
  for (int t = 0; t < 10; ++t) {
    State next = env.step(s, env.optimal_action(s, far.theta), far.theta);
    far.steps.push_back({s, {}, {}, 0, next});
    s = next;
  }
  CHECK(env.metric(far) == 0.0);
}

TEST_CASE("highway: theta codes are uniform over the closed set") {
  HighwayEnv env;
  std::mt19937_64 rng(3);
  std::map<double, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[env.sample_theta(rng)[0]];
  CHECK(counts.size() == 4);
  for (const auto& [code, n] : counts) {
    CAPTURE(code);
    CHECK(std::abs(static_cast<double>(n) / draws - 0.25) <= 0.01);
    CHECK(counts.count(-code) == 1);
  }
}

TEST_CASE("highway: reset state is lane valued with prev equal to current") {
  HighwayEnv env;
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    auto [s, theta] = env.reset(rng);
    for (int j = 0; j < 3; ++j) CHECK((s[j] == 0.0 || s[j] == 1.0));
    CHECK(s[2] == s[0]);
  }
}

TEST_CASE("highway: robot policy table") {
  HighwayEnv env;
  for (double h : {0.0, 1.0}) {
    for (double prev : {0.0, 1.0}) {
      const State s = vec({h, 0, prev});
      CHECK(env.robot_action(vec({-1}), s) == 0.0);
      CHECK(env.robot_action(vec({1}), s) == 1.0);
      CHECK(env.robot_action(vec({-1.0 / 3.0}), s) == prev);
      CHECK(env.robot_action(vec({1.0 / 3.0}), s) == 1.0 - prev);
    }
  }
  CHECK_THROWS_AS(env.robot_action(vec({0.5}), vec({0, 0, 0})), UsageError);
}

TEST_CASE("highway: transition thresholds the action at zero") {
  HighwayEnv env;
  CHECK(env.transition(vec({0, 0, 0}), vec({0.7}), 1.0) == vec({1, 1, 0}));
  CHECK(env.transition(vec({1, 0, 0}), vec({0.0}), 0.0) == vec({0, 0, 1}));
  CHECK(env.transition(vec({1, 0, 0}), vec({-0.2}), 1.0) == vec({0, 1, 1}));
}

TEST_CASE("highway: oracle avoids the robot and metric bounds") {
  HighwayEnv env;
  CHECK(env.optimal_action(vec({0, 0, 0}), vec({-1}))[0] == 1.0);
  std::mt19937_64 rng(5);
  double random_total = 0.0;
  for (int i = 0; i < 500; ++i) {
    CHECK(env.metric(oracle_episode(env, rng)) == 0.0);
    random_total += env.metric(random_episode(env, rng));
  }
  CHECK(random_total > 0.0);

  Episode always{vec({-1}), {}}, never{vec({-1}), {}};
  for (int t = 0; t < 10; ++t) {
    always.steps.push_back({vec({0, 0, 0}), vec({-1}), {}, 0, vec({0, 0, 0})});
    never.steps.push_back({vec({1, 0, 1}), vec({1}), {}, 0, vec({1, 0, 1})});
  }
  CHECK(env.metric(always) == 1.0);
  CHECK(env.metric(never) == 0.0);
}

TEST_CASE("relaxed steps agree with the exact dynamics away from kinks") {
  TreasureEnv treasure(2);
  Matrix s(2, 2), a(2, 2);
  s << 0, 0, 9.5, -3;
  a << 1, -1, 1.5, 0.5;
  const Matrix next = treasure.relaxed_step(Var::constant(s), Var::constant(a), Matrix::Zero(2, 2)).value();
  CHECK(next(0, 0) == 1.0);
  CHECK(next(0, 1) == -1.0);
  CHECK(next(1, 0) == 10.0);
  CHECK(next(1, 1) == -2.5);

  HighwayEnv highway;
  Matrix hs(2, 3), ha(2, 1), theta(2, 1);
  hs << 0, 1, 1, 1, 0, 0;
  ha << 2.0, -2.0;
  theta << 1.0 / 3.0, -1.0 / 3.0;
  const Matrix hn = highway.relaxed_step(Var::constant(hs), Var::constant(ha), theta).value();
  CHECK(hn(0, 0) > 0.99);
  CHECK(hn(1, 0) < 0.01);
  CHECK(hn(0, 1) == 0.0);  // avoid, prev lane 1
  CHECK(hn(1, 1) == 0.0);  // follow, prev lane 0
  CHECK(hn(0, 2) == 0.0);
  CHECK(hn(1, 2) == 1.0);
}

TEST_CASE("factory and names") {
  CHECK(make_environment({EnvKind::kTreasure, 2})->state_dim() == 2);
  CHECK(make_environment({EnvKind::kHighway, 0})->state_dim() == 3);
  CHECK(env_kind_from_string("highway") == EnvKind::kHighway);
  CHECK(to_string(EnvKind::kTreasure) == "treasure");
  CHECK_THROWS_AS(env_kind_from_string("lava"), UsageError);
  CHECK_THROWS_AS(TreasureEnv(0), UsageError);
}
