#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coadapt/baselines.hpp"
#include "coadapt/environment.hpp"
#include "coadapt/interface_learning.hpp"
#include "coadapt/simulated_human.hpp"

namespace coadapt {

enum class Algorithm { kBayes, kProp, kConv, kLimit, kOursP, kOursC };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& name);
const std::vector<Algorithm>& all_algorithms();

// Interface structure an algorithm imposes, or nullopt for none (LIMIT).
std::optional<HumanStructure> own_structure(Algorithm a);
// Default simulated-human pretraining structure for an algorithm: the first
// of bayes-linear, proportional, convex that differs from its own structure.
HumanStructure default_human_structure(Algorithm a);

// Everything an interface algorithm needs besides the environment and seed.
struct AgentSettings {
  LossWeights weights;  // lambda/gamma/k; prior kind is set per algorithm
  NetworkSizes sizes;
  TrainSchedule schedule;
  BayesConfig bayes;
};

// Loss weights actually used by `a` given the configured values.
LossWeights effective_weights(Algorithm a, const LossWeights& configured);

// One robot-side interface: emits signals, sees each tuple, and updates
// between interactions.
class InterfaceAgent {
 public:
  virtual ~InterfaceAgent() = default;

  virtual Algorithm algorithm() const = 0;
  virtual Signal signal(const State& s, const HiddenInfo& theta) const = 0;
  virtual void record(const InteractionTuple&) {}
  // Called once per completed interaction with its metric.
  virtual TrainStats finish_interaction(const Episode& episode, double metric) = 0;
  virtual std::vector<double> flat_weights() const = 0;
  // Learned or frozen network policy, when the algorithm has one.
  virtual const InterfacePolicy* policy() const { return nullptr; }
};

class LearnedAgent final : public InterfaceAgent {
 public:
  LearnedAgent(Algorithm algorithm, const Environment& env,
               const AgentSettings& settings, std::uint64_t seed);

  Algorithm algorithm() const override { return algorithm_; }
  Signal signal(const State& s, const HiddenInfo& theta) const override;
  void record(const InteractionTuple& tuple) override;
  TrainStats finish_interaction(const Episode& episode, double metric) override;
  std::vector<double> flat_weights() const override;
  const InterfacePolicy* policy() const override { return &learner_.policy(); }

  InterfaceLearner& learner() { return learner_; }
  const InterfaceLearner& learner() const { return learner_; }

 private:
  Algorithm algorithm_;
  InterfaceLearner learner_;
};

class PriorOnlyAgent final : public InterfaceAgent {
 public:
  PriorOnlyAgent(Algorithm algorithm, const Environment& env,
                 const AgentSettings& settings, std::uint64_t seed);

  Algorithm algorithm() const override { return algorithm_; }
  Signal signal(const State& s, const HiddenInfo& theta) const override;
  TrainStats finish_interaction(const Episode&, double) override;
  std::vector<double> flat_weights() const override;
  const InterfacePolicy* policy() const override { return &policy_; }

 private:
  Algorithm algorithm_;
  InterfacePolicy policy_;
};

struct BayesLogRow {
  std::int64_t proposal = 0;
  Vector a;
  double reward = 0.0;
};

class BayesAgent final : public InterfaceAgent {
 public:
  BayesAgent(const Environment& env, const AgentSettings& settings,
             std::uint64_t seed);

  Algorithm algorithm() const override { return Algorithm::kBayes; }
  Signal signal(const State& s, const HiddenInfo& theta) const override;
  TrainStats finish_interaction(const Episode& episode, double metric) override;
  std::vector<double> flat_weights() const override;

  const BayesOptimizer& optimizer() const { return optimizer_; }
  const std::vector<BayesLogRow>& log() const { return log_; }
  const LinearInterface& current() const { return current_; }

 private:
  const Environment* env_;
  std::mt19937_64 rng_;
  BayesOptimizer optimizer_;
  LinearInterface current_;
  std::vector<BayesLogRow> log_;
};

std::unique_ptr<InterfaceAgent> make_agent(Algorithm algorithm,
                                           const Environment& env,
                                           const AgentSettings& settings,
                                           std::uint64_t seed);

// CSV lines (proposal, a0..aN, reward) for a Bayes agent's observations.
std::string bayes_log_csv(const std::vector<BayesLogRow>& log);

}  // namespace coadapt
