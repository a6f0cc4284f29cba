#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coadapt/domain.hpp"
#include "coadapt/environment.hpp"
#include "coadapt/mlp.hpp"
#include "coadapt/optimizer.hpp"

namespace coadapt {

enum class PriorKind { kNone, kProportionality, kConvexity, kGeneric };

std::string to_string(PriorKind kind);
PriorKind prior_kind_from_string(const std::string& name);

// Weights of the combined objective
//   lambda1 * prior + lambda2 * policy + lambda3 * decoder
// plus the proportionality sensitivity gamma and the rollout length k.
struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;
  double gamma = -0.5;
  int k = 10;
  PriorKind prior = PriorKind::kNone;

  void validate() const;
};

struct NetworkSizes {
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> human_hidden{64, 64};
  std::vector<int> decoder_hidden{128, 128};
};

// R_psi: (s, theta) -> x in (-1, 1)^d.
class InterfacePolicy {
 public:
  InterfacePolicy(const Environment& env, const std::vector<int>& hidden,
                  std::mt19937_64& rng);

  // Batch forward on the tape. `states` is B x dim_s in raw units, `theta`
  // is B x dim_theta.
  Var forward(const Var& states, const Matrix& theta,
              ParamUse use = ParamUse::kTrack) const;
  Matrix evaluate(const Matrix& states, const Matrix& theta) const;
  Signal emit_signal(const State& s, const HiddenInfo& theta) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const Environment& env() const { return *env_; }

 private:
  const Environment* env_;
  Mlp net_;
};

// H_phi: (s, x) -> a, bounded to the action box. Never sees theta.
class HumanModel {
 public:
  HumanModel(const Environment& env, const std::vector<int>& hidden,
             std::mt19937_64& rng);

  Var forward(const Var& states, const Var& signals,
              ParamUse use = ParamUse::kTrack) const;
  Action predict(const State& s, const Signal& x) const;

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  const Environment* env_;
  Mlp net_;
};

// Delta_sigma: flattened rollout of k + 1 (s, a) pairs -> theta estimate.
class Decoder {
 public:
  Decoder(const Environment& env, int k, const std::vector<int>& hidden,
          std::mt19937_64& rng);

  Var forward(const Trajectory& trajectory,
              ParamUse use = ParamUse::kTrack) const;
  int rollout_length() const { return k_; }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

 private:
  const Environment* env_;
  int k_;
  Mlp net_;
};

// Draws a prior-consistent signal x_hat for (s, theta).
using PriorSampler = std::function<Signal(const State&, const HiddenInfo&)>;

struct ProportionalityTriple {
  State s;
  HiddenInfo theta1;
  HiddenInfo theta2;
};

// Exponents above this are clamped in the proportionality weight.
inline constexpr double kMaxPriorExponent = 30.0;

Var prior_loss_generic(const InterfacePolicy& policy,
                       const std::vector<InteractionTuple>& batch,
                       const PriorSampler& sampler);
Var prior_loss_proportionality(const InterfacePolicy& policy,
                               const std::vector<ProportionalityTriple>& batch,
                               double gamma,
                               std::int64_t* clamp_events = nullptr);
Var prior_loss_convexity(const InterfacePolicy& policy,
                         const std::vector<InteractionTuple>& batch);
// Gradients reach only the human model.
Var policy_loss(const HumanModel& human, const InterfacePolicy& policy,
                const std::vector<InteractionTuple>& batch);
// Counterfactual rollout with learned policy and human model through the
// environment's relaxed dynamics. The human model's weights enter as
// constants, so only the interface policy (and the start states, if they are
// tape variables) receive gradients.
Trajectory rollout(const InterfacePolicy& policy, const HumanModel& human,
                   const Environment& env, const Matrix& start_states,
                   const Matrix& theta, int k);
// Gradients reach the interface policy and decoder, not the human model.
Var decoder_loss(const Decoder& decoder, const InterfacePolicy& policy,
                 const HumanModel& human, const Environment& env,
                 const std::vector<InteractionTuple>& batch, int k);

Matrix stack_states(const std::vector<InteractionTuple>& batch);
Matrix stack_theta(const std::vector<InteractionTuple>& batch);
Matrix stack_actions(const std::vector<InteractionTuple>& batch);

struct LossBreakdown {
  Var total;
  double prior = 0.0;
  double policy = 0.0;
  double decoder = 0.0;
  bool prior_evaluated = false;
};

struct TrainStats {
  bool skipped = false;
  int steps = 0;
  double prior = 0.0;
  double policy = 0.0;
  double decoder = 0.0;
  double total = 0.0;
};

struct PriorFitResult {
  double loss = 0.0;
  int steps = 0;
  bool converged = false;
};

struct TrainSchedule {
  int gradient_steps = 32;  // G
  int batch_size = 64;      // B
  double learning_rate = 1e-3;
  std::size_t buffer_capacity = 5000;
  int prior_pretrain_steps = 500;
};

// The online learner: three networks, one optimizer, the tuple buffer and
// the session RNG that drives minibatch sampling.
class InterfaceLearner {
 public:
  InterfaceLearner(const Environment& env, LossWeights weights,
                   NetworkSizes sizes, TrainSchedule schedule,
                   std::uint64_t seed);

  Signal emit_signal(const State& s, const HiddenInfo& theta) const {
    return policy_.emit_signal(s, theta);
  }
  void push(InteractionTuple tuple) { buffer_.push(std::move(tuple)); }

  LossBreakdown combined_loss(const std::vector<InteractionTuple>& batch,
                              const std::vector<InteractionTuple>* partners);
  // G optimizer steps on minibatches of size B.
  TrainStats train_step(int gradient_steps, int batch_size);
  TrainStats train_step() {
    return train_step(schedule_.gradient_steps, schedule_.batch_size);
  }
  // Pretrains the interface policy on the prior loss alone using synthetic
  // (s, theta) samples. No-op for PriorKind::kNone.
  PriorFitResult initialize_with_prior(PriorKind kind, int pretrain_steps);

  void set_prior_sampler(PriorSampler sampler) { sampler_ = std::move(sampler); }

  InterfacePolicy& policy() { return policy_; }
  const InterfacePolicy& policy() const { return policy_; }
  HumanModel& human_model() { return human_; }
  const HumanModel& human_model() const { return human_; }
  Decoder& decoder() { return decoder_; }
  const Decoder& decoder() const { return decoder_; }
  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const LossWeights& weights() const { return weights_; }
  std::int64_t prior_evaluations() const { return prior_evaluations_; }
  std::int64_t exponent_clamp_events() const { return exponent_clamps_; }
  // Flattened copy of every trainable weight in a fixed order.
  std::vector<double> flat_weights() const;

 private:
  Var prior_term(PriorKind kind, const std::vector<InteractionTuple>& batch,
                 const std::vector<InteractionTuple>* partners);

  const Environment* env_;
  LossWeights weights_;
  TrainSchedule schedule_;
  std::mt19937_64 init_rng_;
  std::mt19937_64 rng_;
  std::mt19937_64 prior_rng_;
  InterfacePolicy policy_;
  HumanModel human_;
  Decoder decoder_;
  Optimizer optimizer_;
  ReplayBuffer buffer_;
  PriorSampler sampler_;
  std::int64_t prior_evaluations_ = 0;
  std::int64_t exponent_clamps_ = 0;
};

// Fits the interface policy to a prior alone on synthetic (s, theta) draws
// from the environment, stopping once the batch loss drops below 1e-3.
// Returns the last batch loss; `converged` reports whether the threshold
// was reached.
PriorFitResult fit_prior(InterfacePolicy& policy, const Environment& env,
                         PriorKind kind, int max_steps, int batch_size,
                         double learning_rate, double gamma,
                         std::mt19937_64& rng, const PriorSampler* sampler = nullptr);

// Mean ||R(s, theta) + R(s, -theta)|| over fresh (s, theta) samples.
double antisymmetry_residual(const InterfacePolicy& policy,
                             const Environment& env, std::mt19937_64& rng,
                             int samples = 256);

// Plug-in estimate (nats) of I(a; theta) pooled over states, from
// equal-width bins per component. Diagnostic only; nullopt with fewer than
// 100 tuples.
std::optional<double> mi_diagnostic(const ReplayBuffer& buffer, int bins);

}  // namespace coadapt
