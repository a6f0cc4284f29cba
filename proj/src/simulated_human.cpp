#include "coadapt/simulated_human.hpp"

#include <memory>

#include "coadapt/baselines.hpp"

namespace coadapt {

std::string to_string(HumanStructure s) {
  switch (s) {
    case HumanStructure::kBayesLinear: return "bayes-linear";
    case HumanStructure::kProportional: return "proportional";
    case HumanStructure::kConvex: return "convex";
    case HumanStructure::kRandom: return "random";
  }
  return "random";
}

HumanStructure human_structure_from_string(const std::string& name) {
  if (name == "bayes-linear") return HumanStructure::kBayesLinear;
  if (name == "proportional") return HumanStructure::kProportional;
  if (name == "convex") return HumanStructure::kConvex;
  if (name == "random") return HumanStructure::kRandom;
  throw UsageError("unknown human structure '" + name + "'");
}

SignalFn make_teacher(HumanStructure structure, const Environment& env,
                      const NetworkSizes& sizes, const TrainSchedule& schedule,
                      double gamma, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x7eac4U};
  std::mt19937_64 rng(seq);
  switch (structure) {
    case HumanStructure::kBayesLinear: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      Matrix a(env.signal_dim(), env.state_dim() + env.theta_dim());
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        for (Eigen::Index r = 0; r < a.rows(); ++r) a(r, c) = u(rng);
      }
      auto linear = std::make_shared<LinearInterface>(env, std::move(a));
      return [linear](const State& s, const HiddenInfo& theta) {
        return linear->emit_signal(s, theta);
      };
    }
    case HumanStructure::kProportional:
    case HumanStructure::kConvex: {
      const PriorKind kind = structure == HumanStructure::kConvex
                                 ? PriorKind::kConvexity
                                 : PriorKind::kProportionality;
      auto policy = std::make_shared<InterfacePolicy>(
          prior_only_interface(env, kind, sizes, schedule, gamma, rng()));
      return [policy](const State& s, const HiddenInfo& theta) {
        return policy->emit_signal(s, theta);
      };
    }
    case HumanStructure::kRandom: {
      auto policy = std::make_shared<InterfacePolicy>(env, sizes.policy_hidden, rng);
      return [policy](const State& s, const HiddenInfo& theta) {
        return policy->emit_signal(s, theta);
      };
    }
  }
  throw UsageError("unknown human structure");
}

namespace {

std::mt19937_64 human_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

}  // namespace

SimulatedHuman::SimulatedHuman(const Environment& env, HumanConfig config,
                               std::uint64_t seed)
    : env_(&env), config_(std::move(config)), rng_(human_rng(seed, 0x4a11U)) {
  std::vector<int> widths{env.signal_dim() + env.state_dim()};
  widths.insert(widths.end(), config_.hidden.begin(), config_.hidden.end());
  widths.push_back(env.action_dim());
  net_ = Mlp(widths, OutputActivation::kTanh, rng_, "human");
  adapt_opt_ = Optimizer(net_.parameters(),
                         OptimizerConfig{.learning_rate = config_.adaptation_rate});
}

Action SimulatedHuman::act(const Signal& x, const State& s) const {
  if (x.size() != env_->signal_dim() || s.size() != env_->state_dim()) {
    throw UsageError("simulated human: input dimensions do not match");
  }
  Matrix features(1, x.size() + s.size());
  features << x.transpose(), s.transpose() / env_->state_scale();
  return env_->action_bound() * net_.evaluate(features).row(0).transpose();
}

Episode SimulatedHuman::play(const SignalFn& interface, std::mt19937_64& rng) const {
  auto [s, theta] = env_->reset(rng);
  Episode episode;
  episode.theta = theta;
  for (int t = 0; t < env_->horizon(); ++t) {
    Step step;
    step.s = s;
    step.x = interface(s, theta);
    step.a = act(step.x, s);
    step.robot = env_->robot_action(theta, s);
    step.next = env_->transition(s, step.a, step.robot);
    s = step.next;
    episode.steps.push_back(std::move(step));
  }
  return episode;
}

Matrix SimulatedHuman::features(const Episode& episode) const {
  const int dx = env_->signal_dim();
  const int ds = env_->state_dim();
  Matrix f(episode.steps.size(), dx + ds);
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    f.row(t) << episode.steps[t].x.transpose(),
        episode.steps[t].s.transpose() / env_->state_scale();
  }
  return f;
}

void SimulatedHuman::fit(const Matrix& features, const Matrix& targets,
                         Optimizer& opt, int steps) {
  Var input = Var::constant(features);
  Var target = Var::constant(targets);
  for (int i = 0; i < steps; ++i) {
    Var predicted = env_->action_bound() * net_.forward(input);
    Var loss = squared_error(predicted, target);
    loss.backward();
    opt.step();
  }
}

void SimulatedHuman::pretrain(const SignalFn& teacher, int episodes) {
  if (episodes <= 0) return;
  Optimizer opt(net_.parameters(),
                OptimizerConfig{.learning_rate = config_.pretrain_rate});
  for (int e = 0; e < episodes; ++e) {
    const Episode episode = play(teacher, rng_);
    Matrix targets(episode.steps.size(), env_->action_dim());
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
      targets.row(t) =
          env_->optimal_action(episode.steps[t].s, episode.theta).transpose();
    }
    fit(features(episode), targets, opt, config_.pretrain_steps_per_episode);
  }
}

void SimulatedHuman::adapt(const Episode& episode, const HiddenInfo& revealed_theta) {
  if (episode.steps.empty() || config_.adaptation_steps <= 0) return;
  Matrix targets(episode.steps.size(), env_->action_dim());
  for (std::size_t t = 0; t < episode.steps.size(); ++t) {
    targets.row(t) =
        env_->optimal_action(episode.steps[t].s, revealed_theta).transpose();
  }
  fit(features(episode), targets, adapt_opt_, config_.adaptation_steps);
}

std::vector<double> SimulatedHuman::flat_weights() const {
  std::vector<double> out;
  for (const auto& p : net_.parameters()) {
    out.insert(out.end(), p.value().data(), p.value().data() + p.value().size());
  }
  return out;
}

}  // namespace coadapt
