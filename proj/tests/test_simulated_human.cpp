#include <random>

#include "doctest.h"

#include "coadapt/baselines.hpp"
#include "coadapt/simulated_human.hpp"

using namespace coadapt;

namespace {

HumanConfig small_config() {
  HumanConfig c;
  c.hidden = {32, 32};
  return c;
}

double mean_error(const SimulatedHuman& human, const Environment& env,
                  const SignalFn& interface, std::uint64_t seed, int episodes) {
  std::mt19937_64 rng(seed);
  double total = 0.0;
  for (int i = 0; i < episodes; ++i) total += env.metric(human.play(interface, rng));
  return total / episodes;
}

}  // namespace

TEST_CASE("act: zero weights give the bounded squashed bias") {
  TreasureEnv env(2);
  SimulatedHuman human(env, small_config(), 1);
  for (auto& layer : human.net().layers()) layer.weight.mutable_value().setZero();
  human.net().layers().back().bias.mutable_value() << 0.5, -1.0;
  const Action a = human.act(Signal::Constant(2, 0.3), State::Constant(2, 4.0));
  CHECK(a[0] == doctest::Approx(2.0 * std::tanh(0.5)));
  CHECK(a[1] == doctest::Approx(2.0 * std::tanh(-1.0)));
}

TEST_CASE("act: bounded, deterministic, and dimension checked") {
  TreasureEnv env(3);
  SimulatedHuman human(env, small_config(), 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1), s(-10, 10);
  for (int i = 0; i < 10000; ++i) {
    Signal x(3);
    State st(3);
    for (int j = 0; j < 3; ++j) {
      x[j] = u(rng);
      st[j] = s(rng);
    }
    const Action a = human.act(x, st);
    CHECK((a.array().abs() <= 2.0).all());
    if (i == 0) CHECK(human.act(x, st) == a);
  }
  CHECK_THROWS_AS(human.act(Signal::Zero(2), State::Zero(3)), UsageError);
}

TEST_CASE("pretraining: zero episodes is a no-op, seeds are reproducible") {
  TreasureEnv env(2);
  const SignalFn teacher = make_teacher(HumanStructure::kBayesLinear, env, {}, {}, -0.5, 4);
  SimulatedHuman fresh(env, small_config(), 5), untouched(env, small_config(), 5);
  untouched.pretrain(teacher, 0);
  CHECK(fresh.flat_weights() == untouched.flat_weights());

  SimulatedHuman a(env, small_config(), 6), b(env, small_config(), 6);
  a.pretrain(teacher, 20);
  b.pretrain(teacher, 20);
  CHECK(a.flat_weights() == b.flat_weights());
  CHECK(a.flat_weights() != fresh.flat_weights());
}

TEST_CASE("pretraining instills a bias toward the teacher interface") {
  TreasureEnv env(2);
  const SignalFn teacher = make_teacher(HumanStructure::kBayesLinear, env, {}, {}, -0.5, 7);
  const SignalFn stranger = make_teacher(HumanStructure::kRandom, env, {}, {}, -0.5, 8);
  SimulatedHuman human(env, HumanConfig{}, 9);
  human.pretrain(teacher, 300);
  // Paired evaluation: same reset stream for both interfaces.
  CHECK(mean_error(human, env, teacher, 10, 200) < mean_error(human, env, stranger, 10, 200));
}

TEST_CASE("adapt: zero rate leaves weights unchanged") {
  TreasureEnv env(2);
  HumanConfig c = small_config();
  c.adaptation_rate = 0.0;
  SimulatedHuman human(env, c, 11);
  const auto before = human.flat_weights();
  std::mt19937_64 rng(12);
  const SignalFn zero = [](const State&, const HiddenInfo&) { return Signal::Zero(2); };
  const Episode e = human.play(zero, rng);
  human.adapt(e, e.theta);
  CHECK(human.flat_weights() == before);
}

TEST_CASE("adapt: repeated adaptation on one episode fits its oracle actions") {
  TreasureEnv env(2);
  SimulatedHuman human(env, small_config(), 13);
  const SignalFn fixed = make_teacher(HumanStructure::kBayesLinear, env, {}, {}, -0.5, 14);
  std::mt19937_64 rng(15);
  const Episode e = human.play(fixed, rng);
  auto action_error = [&] {
    double err = 0.0;
    for (const auto& step : e.steps) {
      err += (human.act(step.x, step.s) - env.optimal_action(step.s, e.theta)).squaredNorm();
    }
    return err;
  };
  const double before = action_error();
  for (int i = 0; i < 400; ++i) human.adapt(e, e.theta);
  CHECK(action_error() < 0.01 * before);

  SimulatedHuman twin(env, small_config(), 13);
  for (int i = 0; i < 400; ++i) twin.adapt(e, e.theta);
  CHECK(twin.flat_weights() == human.flat_weights());
}

TEST_CASE("co-adaptation sanity: a convex-trained human reads a Conv interface better") {
  TreasureEnv env(3);
  // The Conv interface under test is also the convex teacher.
  const SignalFn conv = make_teacher(HumanStructure::kConvex, env, {}, {}, -0.5, 16);
  const SignalFn linear = make_teacher(HumanStructure::kBayesLinear, env, {}, {}, -0.5, 17);
  SimulatedHuman matched(env, HumanConfig{}, 18), mismatched(env, HumanConfig{}, 18);
  matched.pretrain(conv, 300);
  mismatched.pretrain(linear, 300);
  CHECK(mean_error(matched, env, conv, 19, 200) < mean_error(mismatched, env, conv, 19, 200));
}

TEST_CASE("structure names round trip") {
  for (auto s : {HumanStructure::kBayesLinear, HumanStructure::kProportional,
                 HumanStructure::kConvex, HumanStructure::kRandom}) {
    CHECK(human_structure_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(human_structure_from_string("psychic"), UsageError);
}
