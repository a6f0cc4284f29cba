#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coadapt/autodiff.hpp"
#include "coadapt/domain.hpp"

namespace coadapt {

enum class EnvKind { kTreasure, kHighway };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct Step {
  State s;
  Action a;
  Signal x;
  double robot = 0.0;  // u; always 0 for Treasure
  State next;
};

struct Episode {
  HiddenInfo theta;
  std::vector<Step> steps;
};

// A repeated-interaction task: theta sampler, dynamics, robot policy and the
// per-interaction metric (lower is better).
class Environment {
 public:
  static constexpr int kHorizon = 10;

  virtual ~Environment() = default;

  virtual EnvKind kind() const = 0;
  std::string name() const { return to_string(kind()); }
  int horizon() const { return kHorizon; }
  virtual int state_dim() const = 0;
  virtual int theta_dim() const = 0;
  virtual int signal_dim() const = 0;
  virtual int action_dim() const = 0;
  // Actions are bounded componentwise by +-action_bound().
  virtual double action_bound() const = 0;
  // Divisors that bring states and theta to roughly unit range for networks.
  virtual double state_scale() const = 0;
  virtual double theta_scale() const = 0;

  virtual HiddenInfo sample_theta(std::mt19937_64& rng) const = 0;
  virtual std::pair<State, HiddenInfo> reset(std::mt19937_64& rng) const = 0;
  virtual double robot_action(const HiddenInfo& theta, const State& s) const = 0;
  // Out-of-bounds actions are clamped and counted, not rejected.
  virtual State transition(const State& s, const Action& a, double robot) const = 0;
  virtual double metric(const Episode& episode) const = 0;
  // Oracle action for a human who knows theta.
  virtual Action optimal_action(const State& s, const HiddenInfo& theta) const = 0;

  // Differentiable batch dynamics used inside counterfactual rollouts.
  // `states` and `actions` hold one sample per row in raw units.
  virtual Var relaxed_step(const Var& states, const Var& actions,
                           const Matrix& theta) const = 0;

  // Convenience: transition with the robot's own policy.
  State step(const State& s, const Action& a, const HiddenInfo& theta) const {
    return transition(s, a, robot_action(theta, s));
  }

  std::int64_t clamp_events() const { return clamp_events_; }

 protected:
  Action clamp_action(const Action& a) const;
  mutable std::int64_t clamp_events_ = 0;
};

class TreasureEnv final : public Environment {
 public:
  static constexpr double kBound = 10.0;
  static constexpr double kActionBound = 2.0;

  explicit TreasureEnv(int n);

  EnvKind kind() const override { return EnvKind::kTreasure; }
  int state_dim() const override { return n_; }
  int theta_dim() const override { return n_; }
  int signal_dim() const override { return n_; }
  int action_dim() const override { return n_; }
  double action_bound() const override { return kActionBound; }
  double state_scale() const override { return kBound; }
  double theta_scale() const override { return kBound; }

  HiddenInfo sample_theta(std::mt19937_64& rng) const override;
  std::pair<State, HiddenInfo> reset(std::mt19937_64& rng) const override;
  double robot_action(const HiddenInfo&, const State&) const override { return 0.0; }
  State transition(const State& s, const Action& a, double robot) const override;
  double metric(const Episode& episode) const override;
  Action optimal_action(const State& s, const HiddenInfo& theta) const override;
  Var relaxed_step(const Var& states, const Var& actions,
                   const Matrix& theta) const override;

 private:
  int n_;
};

// Two-lane highway. Lane 0 is the right lane, lane 1 the left lane.
// Hidden information encodes the robot car's policy:
//   -1   always right lane
//   +1   always left lane
//   -1/3 merge into the human's previous lane
//   +1/3 merge into the lane opposite the human's previous lane
class HighwayEnv final : public Environment {
 public:
  static constexpr double kStayRight = -1.0;
  static constexpr double kStayLeft = 1.0;
  static constexpr double kFollow = -1.0 / 3.0;
  static constexpr double kAvoid = 1.0 / 3.0;
  static const std::vector<double>& policies();

  // Steepness of the logistic lane relaxation used in rollouts.
  static constexpr double kRelaxSharpness = 5.0;

  EnvKind kind() const override { return EnvKind::kHighway; }
  int state_dim() const override { return 3; }
  int theta_dim() const override { return 1; }
  int signal_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  double action_bound() const override { return 1.0; }
  double state_scale() const override { return 1.0; }
  double theta_scale() const override { return 1.0; }

  HiddenInfo sample_theta(std::mt19937_64& rng) const override;
  std::pair<State, HiddenInfo> reset(std::mt19937_64& rng) const override;
  double robot_action(const HiddenInfo& theta, const State& s) const override;
  State transition(const State& s, const Action& a, double robot) const override;
  double metric(const Episode& episode) const override;
  Action optimal_action(const State& s, const HiddenInfo& theta) const override;
  Var relaxed_step(const Var& states, const Var& actions,
                   const Matrix& theta) const override;

  // Robot lane for a policy code given the human's previous lane.
  static int robot_lane(double theta, int prev_human_lane);
};

struct EnvConfig {
  EnvKind kind = EnvKind::kTreasure;
  int dimension = 3;  // Treasure only
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config);

}  // namespace coadapt
