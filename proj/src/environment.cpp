#include "coadapt/environment.hpp"

#include <algorithm>
#include <cmath>

namespace coadapt {

std::string to_string(EnvKind kind) {
  return kind == EnvKind::kTreasure ? "treasure" : "highway";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "treasure") return EnvKind::kTreasure;
  if (name == "highway") return EnvKind::kHighway;
  throw UsageError("unknown environment '" + name + "'");
}

Action Environment::clamp_action(const Action& a) const {
  if (a.size() != action_dim()) {
    throw UsageError("action has " + std::to_string(a.size()) +
                     " components, expected " + std::to_string(action_dim()));
  }
  const double bound = action_bound();
  if ((a.array().abs() > bound).any() || !a.allFinite()) ++clamp_events_;
  Action out = a;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = std::isfinite(out[i]) ? std::clamp(out[i], -bound, bound) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------- Treasure

TreasureEnv::TreasureEnv(int n) : n_(n) {
  if (n < 1) throw UsageError("treasure dimension must be at least 1");
}

HiddenInfo TreasureEnv::sample_theta(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-kBound, kBound);
  HiddenInfo theta(n_);
  for (int i = 0; i < n_; ++i) theta[i] = u(rng);
  return theta;
}

std::pair<State, HiddenInfo> TreasureEnv::reset(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-kBound, kBound);
  State s(n_);
  for (int i = 0; i < n_; ++i) s[i] = u(rng);
  HiddenInfo theta = sample_theta(rng);
  return {std::move(s), std::move(theta)};
}

State TreasureEnv::transition(const State& s, const Action& a, double) const {
  if (s.size() != n_) throw UsageError("treasure state has wrong dimension");
  return (s + clamp_action(a)).cwiseMax(-kBound).cwiseMin(kBound);
}

double TreasureEnv::metric(const Episode& episode) const {
  if (static_cast<int>(episode.steps.size()) != horizon()) {
    throw UsageError("metric needs a completed episode");
  }
  return (episode.steps.back().next - episode.theta).squaredNorm();
}

Action TreasureEnv::optimal_action(const State& s, const HiddenInfo& theta) const {
  return (theta - s).cwiseMax(-kActionBound).cwiseMin(kActionBound);
}

Var TreasureEnv::relaxed_step(const Var& states, const Var& actions,
                              const Matrix&) const {
  return clamp(states + actions, -kBound, kBound);
}

// ----------------------------------------------------------------- Highway

const std::vector<double>& HighwayEnv::policies() {
  static const std::vector<double> kPolicies{kStayRight, kFollow, kAvoid, kStayLeft};
  return kPolicies;
}

int HighwayEnv::robot_lane(double theta, int prev_human_lane) {
  constexpr double kTol = 1e-9;
  if (std::abs(theta - kStayRight) < kTol) return 0;
  if (std::abs(theta - kStayLeft) < kTol) return 1;
  if (std::abs(theta - kFollow) < kTol) return prev_human_lane;
  if (std::abs(theta - kAvoid) < kTol) return 1 - prev_human_lane;
  throw UsageError("highway theta " + std::to_string(theta) +
                   " is not one of the four policy codes");
}

HiddenInfo HighwayEnv::sample_theta(std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, policies().size() - 1);
  HiddenInfo theta(1);
  theta[0] = policies()[pick(rng)];
  return theta;
}

std::pair<State, HiddenInfo> HighwayEnv::reset(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> lane(0, 1);
  State s(3);
  s[0] = lane(rng);
  s[1] = lane(rng);
  s[2] = s[0];
  HiddenInfo theta = sample_theta(rng);
  return {std::move(s), std::move(theta)};
}

double HighwayEnv::robot_action(const HiddenInfo& theta, const State& s) const {
  if (theta.size() != 1 || s.size() != 3) {
    throw UsageError("highway robot_action: wrong dimensions");
  }
  return robot_lane(theta[0], s[2] > 0.5 ? 1 : 0);
}

State HighwayEnv::transition(const State& s, const Action& a, double robot) const {
  if (s.size() != 3) throw UsageError("highway state has wrong dimension");
  const Action clamped = clamp_action(a);
  State next(3);
  next[0] = clamped[0] > 0.0 ? 1.0 : 0.0;
  next[1] = robot;
  next[2] = s[0];
  return next;
}

double HighwayEnv::metric(const Episode& episode) const {
  if (static_cast<int>(episode.steps.size()) != horizon()) {
    throw UsageError("metric needs a completed episode");
  }
  int collisions = 0;
  for (const auto& step : episode.steps) {
    if (step.next[0] == step.next[1]) ++collisions;
  }
  return static_cast<double>(collisions) / horizon();
}

Action HighwayEnv::optimal_action(const State& s, const HiddenInfo& theta) const {
  Action a(1);
  a[0] = robot_action(theta, s) == 0 ? 1.0 : -1.0;
  return a;
}

Var HighwayEnv::relaxed_step(const Var& states, const Var& actions,
                             const Matrix& theta) const {
  const Eigen::Index batch = states.rows();
  Matrix robot(batch, 1);
  for (Eigen::Index b = 0; b < batch; ++b) {
    robot(b, 0) = robot_lane(theta(b, 0), states.value()(b, 2) > 0.5 ? 1 : 0);
  }
  return concat_cols({sigmoid(kRelaxSharpness * actions),
                      Var::constant(std::move(robot)), slice_cols(states, 0, 1)});
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config) {
  if (config.kind == EnvKind::kTreasure) {
    return std::make_unique<TreasureEnv>(config.dimension);
  }
  return std::make_unique<HighwayEnv>();
}

}  // namespace coadapt
