#pragma once

#include <random>
#include <string>
#include <vector>

#include "coadapt/interface_learning.hpp"
#include "gradcheck.hpp"

namespace coadapt::testing {

struct GradientReport {
  std::string env;
  double generic = 0.0;
  double proportionality = 0.0;
  double convexity = 0.0;
  double policy = 0.0;
  double decoder_psi = 0.0;    // through the k-step rollout
  double decoder_sigma = 0.0;
  double policy_on_psi = 0.0;  // routing: must be zero
  double decoder_on_phi = 0.0;
  double prior_on_phi = 0.0;

  double worst_error() const {
    return std::max({generic, proportionality, convexity, policy, decoder_psi,
                     decoder_sigma});
  }
  double worst_leak() const {
    return std::max({policy_on_psi, decoder_on_phi, prior_on_phi});
  }
};

// Random small networks, random in-range batch, k-step rollouts.
inline GradientReport run_gradient_suite(const Environment& env, int k,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<int> hidden{8, 8};
  InterfacePolicy policy(env, hidden, rng);
  HumanModel human(env, hidden, rng);
  Decoder decoder(env, k, hidden, rng);
  // Non-zero biases so every parameter has a non-trivial gradient.
  for (Mlp* net : {&policy.net(), &human.net(), &decoder.net()}) {
    for (auto& layer : net->layers()) {
      layer.bias.mutable_value() = random_matrix(1, layer.bias.cols(), rng, -0.3, 0.3);
    }
  }

  std::vector<InteractionTuple> batch(4);
  std::vector<ProportionalityTriple> triples;
  std::uniform_real_distribution<double> act(-env.action_bound(), env.action_bound());
  for (auto& tuple : batch) {
    auto [s, theta] = env.reset(rng);
    if (env.kind() == EnvKind::kTreasure) s *= 0.5;  // keep rollouts off the walls
    tuple.s = s;
    tuple.theta = theta;
    tuple.a = Action(env.action_dim());
    for (Eigen::Index i = 0; i < tuple.a.size(); ++i) tuple.a[i] = act(rng);
    // A nearby partner keeps the proportionality weight away from underflow.
    HiddenInfo partner = env.sample_theta(rng);
    if (env.kind() == EnvKind::kTreasure) {
      partner = theta + 0.1 * partner;
    }
    triples.push_back({s, theta, partner});
  }
  const PriorSampler sampler = [](const State& s, const HiddenInfo& theta) {
    Signal x = (0.05 * theta.array().sin()).matrix();
    x[0] += 0.01 * s[0];
    return x;
  };

  const auto psi = policy.net().parameters();
  const auto phi = human.net().parameters();
  const auto sigma = decoder.net().parameters();

  GradientReport r;
  r.env = env.name();
  r.generic = max_parameter_error(psi, [&] { return prior_loss_generic(policy, batch, sampler); });
  r.proportionality = max_parameter_error(
      psi, [&] { return prior_loss_proportionality(policy, triples, -0.5); });
  r.convexity = max_parameter_error(psi, [&] { return prior_loss_convexity(policy, batch); });
  r.policy = max_parameter_error(phi, [&] { return policy_loss(human, policy, batch); });
  auto dec = [&] { return decoder_loss(decoder, policy, human, env, batch, k); };
  r.decoder_psi = max_parameter_error(psi, dec);
  r.decoder_sigma = max_parameter_error(sigma, dec);
  r.policy_on_psi = max_abs_gradient(psi, [&] { return policy_loss(human, policy, batch); });
  r.decoder_on_phi = max_abs_gradient(phi, dec);
  r.prior_on_phi = max_abs_gradient(phi, [&] { return prior_loss_convexity(policy, batch); });
  return r;
}

}  // namespace coadapt::testing
