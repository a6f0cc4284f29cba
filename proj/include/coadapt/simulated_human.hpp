#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "coadapt/environment.hpp"
#include "coadapt/interface_learning.hpp"
#include "coadapt/mlp.hpp"
#include "coadapt/optimizer.hpp"

namespace coadapt {

// Interface family a simulated human was pretrained against.
enum class HumanStructure { kBayesLinear, kProportional, kConvex, kRandom };

std::string to_string(HumanStructure s);
HumanStructure human_structure_from_string(const std::string& name);

struct HumanConfig {
  std::vector<int> hidden{64, 64};
  double adaptation_rate = 1e-3;
  int adaptation_steps = 5;
  int pretrain_episodes = 300;
  int pretrain_steps_per_episode = 5;
  double pretrain_rate = 1e-3;
};

using SignalFn = std::function<Signal(const State&, const HiddenInfo&)>;

// A frozen interface of the given structure used to instill a human's
// interpretation bias. Distinct seeds give distinct teachers.
SignalFn make_teacher(HumanStructure structure, const Environment& env,
                      const NetworkSizes& sizes, const TrainSchedule& schedule,
                      double gamma, std::uint64_t seed);

// Perceptron operator (x, s) -> a. Adapts between interactions from the
// revealed theta; never sees theta while acting.
class SimulatedHuman {
 public:
  SimulatedHuman(const Environment& env, HumanConfig config, std::uint64_t seed);

  Action act(const Signal& x, const State& s) const;

  // Supervised pretraining toward the oracle action on episodes played with
  // `teacher` signals.
  void pretrain(const SignalFn& teacher, int episodes);
  // A few gradient steps mapping (x^t, s^t) to the oracle action for the
  // revealed theta.
  void adapt(const Episode& episode, const HiddenInfo& revealed_theta);

  // Plays one interaction against `interface`; does not adapt.
  Episode play(const SignalFn& interface, std::mt19937_64& rng) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const HumanConfig& config() const { return config_; }
  std::vector<double> flat_weights() const;

 private:
  void fit(const Matrix& features, const Matrix& targets, Optimizer& opt,
           int steps);
  Matrix features(const Episode& episode) const;

  const Environment* env_;
  HumanConfig config_;
  std::mt19937_64 rng_;
  Mlp net_;
  Optimizer adapt_opt_;
};

}  // namespace coadapt
