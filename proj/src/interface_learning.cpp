#include "coadapt/interface_learning.hpp"

#include <cmath>
#include <map>

namespace coadapt {

namespace {

std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x1f2e3d4cU};
  return std::mt19937_64(seq);
}

Matrix negate_rows(const Matrix& m) { return -m; }

}  // namespace

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::kNone: return "none";
    case PriorKind::kProportionality: return "proportionality";
    case PriorKind::kConvexity: return "convexity";
    case PriorKind::kGeneric: return "generic";
  }
  return "none";
}

PriorKind prior_kind_from_string(const std::string& name) {
  if (name == "none") return PriorKind::kNone;
  if (name == "proportionality") return PriorKind::kProportionality;
  if (name == "convexity") return PriorKind::kConvexity;
  if (name == "generic") return PriorKind::kGeneric;
  throw UsageError("unknown prior kind '" + name + "'");
}

void LossWeights::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) {
    throw UsageError("loss weights must be non-negative");
  }
  if (k < 1) throw UsageError("rollout length k must be at least 1");
}

// ------------------------------------------------------------------ networks

InterfacePolicy::InterfacePolicy(const Environment& env,
                                 const std::vector<int>& hidden,
                                 std::mt19937_64& rng)
    : env_(&env),
      net_(widths(env.state_dim() + env.theta_dim(), hidden, env.signal_dim()),
           OutputActivation::kTanh, rng, "policy") {}

Var InterfacePolicy::forward(const Var& states, const Matrix& theta,
                             ParamUse use) const {
  if (states.cols() != env_->state_dim() || theta.cols() != env_->theta_dim() ||
      states.rows() != theta.rows()) {
    throw UsageError("interface policy: input dimensions do not match");
  }
  Var features = concat_cols({(1.0 / env_->state_scale()) * states,
                              Var::constant(theta / env_->theta_scale())});
  return net_.forward(features, use);
}

Matrix InterfacePolicy::evaluate(const Matrix& states, const Matrix& theta) const {
  if (states.cols() != env_->state_dim() || theta.cols() != env_->theta_dim() ||
      states.rows() != theta.rows()) {
    throw UsageError("interface policy: input dimensions do not match");
  }
  Matrix features(states.rows(), states.cols() + theta.cols());
  features << states / env_->state_scale(), theta / env_->theta_scale();
  return net_.evaluate(features);
}

Signal InterfacePolicy::emit_signal(const State& s, const HiddenInfo& theta) const {
  return evaluate(s.transpose(), theta.transpose()).row(0).transpose();
}

HumanModel::HumanModel(const Environment& env, const std::vector<int>& hidden,
                       std::mt19937_64& rng)
    : env_(&env),
      net_(widths(env.state_dim() + env.signal_dim(), hidden, env.action_dim()),
           OutputActivation::kTanh, rng, "human_model") {}

Var HumanModel::forward(const Var& states, const Var& signals, ParamUse use) const {
  if (states.cols() != env_->state_dim() || signals.cols() != env_->signal_dim()) {
    throw UsageError("human model: input dimensions do not match");
  }
  Var features =
      concat_cols({(1.0 / env_->state_scale()) * states, signals});
  return env_->action_bound() * net_.forward(features, use);
}

Action HumanModel::predict(const State& s, const Signal& x) const {
  if (s.size() != env_->state_dim() || x.size() != env_->signal_dim()) {
    throw UsageError("human model: input dimensions do not match");
  }
  Matrix features(1, s.size() + x.size());
  features << s.transpose() / env_->state_scale(), x.transpose();
  return env_->action_bound() * net_.evaluate(features).row(0).transpose();
}

Decoder::Decoder(const Environment& env, int k, const std::vector<int>& hidden,
                 std::mt19937_64& rng)
    : env_(&env),
      k_(k),
      net_(widths((k + 1) * (env.state_dim() + env.action_dim()), hidden,
                  env.theta_dim()),
           OutputActivation::kNone, rng, "decoder") {
  if (k < 1) throw UsageError("decoder rollout length must be at least 1");
}

Var Decoder::forward(const Trajectory& trajectory, ParamUse use) const {
  if (static_cast<int>(trajectory.length()) != k_ + 1 ||
      trajectory.actions.size() != trajectory.states.size()) {
    throw UsageError("decoder expects a trajectory of k + 1 state-action pairs");
  }
  std::vector<Var> parts;
  parts.reserve(2 * trajectory.length());
  for (std::size_t t = 0; t < trajectory.length(); ++t) {
    parts.push_back((1.0 / env_->state_scale()) * trajectory.states[t]);
    parts.push_back((1.0 / env_->action_bound()) * trajectory.actions[t]);
  }
  return env_->theta_scale() * net_.forward(concat_cols(parts), use);
}

// -------------------------------------------------------------------- losses

Matrix stack_states(const std::vector<InteractionTuple>& batch) {
  Matrix m(batch.size(), batch.empty() ? 0 : batch.front().s.size());
  for (std::size_t i = 0; i < batch.size(); ++i) m.row(i) = batch[i].s.transpose();
  return m;
}

Matrix stack_theta(const std::vector<InteractionTuple>& batch) {
  Matrix m(batch.size(), batch.empty() ? 0 : batch.front().theta.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    m.row(i) = batch[i].theta.transpose();
  }
  return m;
}

Matrix stack_actions(const std::vector<InteractionTuple>& batch) {
  Matrix m(batch.size(), batch.empty() ? 0 : batch.front().a.size());
  for (std::size_t i = 0; i < batch.size(); ++i) m.row(i) = batch[i].a.transpose();
  return m;
}

Var prior_loss_generic(const InterfacePolicy& policy,
                       const std::vector<InteractionTuple>& batch,
                       const PriorSampler& sampler) {
  if (!sampler) throw UsageError("generic prior needs a sampler");
  const int d = policy.env().signal_dim();
  Matrix target(batch.size(), d);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Signal x_hat = sampler(batch[i].s, batch[i].theta);
    if (x_hat.size() != d) throw UsageError("prior sampler returned wrong width");
    target.row(i) = x_hat.transpose();
  }
  Var x = policy.forward(Var::constant(stack_states(batch)), stack_theta(batch));
  return squared_error(Var::constant(std::move(target)), x);
}

Var prior_loss_proportionality(const InterfacePolicy& policy,
                               const std::vector<ProportionalityTriple>& batch,
                               double gamma, std::int64_t* clamp_events) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const int ds = policy.env().state_dim();
  const int dt = policy.env().theta_dim();
  Matrix states(n, ds), theta1(n, dt), theta2(n, dt), scale(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    states.row(i) = batch[i].s.transpose();
    theta1.row(i) = batch[i].theta1.transpose();
    theta2.row(i) = batch[i].theta2.transpose();
    double exponent = gamma * (batch[i].theta1 - batch[i].theta2).squaredNorm();
    if (exponent > kMaxPriorExponent) {
      exponent = kMaxPriorExponent;
      if (clamp_events) ++*clamp_events;
    }
    scale(i, 0) = std::exp(exponent);
  }
  Var s = Var::constant(std::move(states));
  Var diff = policy.forward(s, theta1) - policy.forward(s, theta2);
  return sum(scale_rows(row_sum(square(diff)), Var::constant(std::move(scale))));
}

Var prior_loss_convexity(const InterfacePolicy& policy,
                         const std::vector<InteractionTuple>& batch) {
  Var s = Var::constant(stack_states(batch));
  const Matrix theta = stack_theta(batch);
  return sum(square(policy.forward(s, theta) + policy.forward(s, negate_rows(theta))));
}

Var policy_loss(const HumanModel& human, const InterfacePolicy& policy,
                const std::vector<InteractionTuple>& batch) {
  const Matrix states = stack_states(batch);
  Var signals = Var::constant(policy.evaluate(states, stack_theta(batch)));
  Var predicted = human.forward(Var::constant(states), signals);
  return squared_error(Var::constant(stack_actions(batch)), predicted);
}

Trajectory rollout(const InterfacePolicy& policy, const HumanModel& human,
                   const Environment& env, const Matrix& start_states,
                   const Matrix& theta, int k) {
  if (k < 1) throw UsageError("rollout length k must be at least 1");
  Trajectory trajectory;
  trajectory.theta = theta;
  trajectory.states.reserve(k + 1);
  trajectory.actions.reserve(k + 1);
  Var s = Var::constant(start_states);
  for (int t = 0; t <= k; ++t) {
    Var x = policy.forward(s, theta, ParamUse::kTrack);
    Var a = human.forward(s, x, ParamUse::kConstant);
    trajectory.states.push_back(s);
    trajectory.actions.push_back(a);
    if (t == k) break;
    s = env.relaxed_step(s, a, theta);
    if (!s.value().allFinite()) {
      throw TrainingError("non-finite state in counterfactual rollout at step " +
                          std::to_string(t + 1));
    }
  }
  return trajectory;
}

Var decoder_loss(const Decoder& decoder, const InterfacePolicy& policy,
                 const HumanModel& human, const Environment& env,
                 const std::vector<InteractionTuple>& batch, int k) {
  const Matrix theta = stack_theta(batch);
  const Trajectory trajectory =
      rollout(policy, human, env, stack_states(batch), theta, k);
  return squared_error(Var::constant(theta), decoder.forward(trajectory));
}

// ------------------------------------------------------------------- learner

InterfaceLearner::InterfaceLearner(const Environment& env, LossWeights weights,
                                   NetworkSizes sizes, TrainSchedule schedule,
                                   std::uint64_t seed)
    : env_(&env),
      weights_(weights),
      schedule_(schedule),
      init_rng_(derive_rng(seed, 1)),
      rng_(derive_rng(seed, 2)),
      prior_rng_(derive_rng(seed, 3)),
      policy_(env, sizes.policy_hidden, init_rng_),
      human_(env, sizes.human_hidden, init_rng_),
      decoder_(env, weights.k, sizes.decoder_hidden, init_rng_),
      buffer_(BufferDims{env.state_dim(), env.action_dim(), env.signal_dim(),
                         env.theta_dim()},
              schedule.buffer_capacity) {
  weights_.validate();
  std::vector<Var> params = policy_.net().parameters();
  for (const auto& p : human_.net().parameters()) params.push_back(p);
  for (const auto& p : decoder_.net().parameters()) params.push_back(p);
  optimizer_ = Optimizer(std::move(params),
                         OptimizerConfig{.learning_rate = schedule.learning_rate});
}

Var InterfaceLearner::prior_term(PriorKind kind,
                                 const std::vector<InteractionTuple>& batch,
                                 const std::vector<InteractionTuple>* partners) {
  ++prior_evaluations_;
  switch (kind) {
    case PriorKind::kConvexity:
      return prior_loss_convexity(policy_, batch);
    case PriorKind::kProportionality: {
      if (!partners || partners->size() != batch.size()) {
        throw UsageError("proportionality prior needs a partner batch");
      }
      std::vector<ProportionalityTriple> triples;
      triples.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        triples.push_back({batch[i].s, batch[i].theta, (*partners)[i].theta});
      }
      return prior_loss_proportionality(policy_, triples, weights_.gamma,
                                        &exponent_clamps_);
    }
    case PriorKind::kGeneric:
      return prior_loss_generic(policy_, batch, sampler_);
    case PriorKind::kNone:
      break;
  }
  throw UsageError("prior term requested without a prior");
}

LossBreakdown InterfaceLearner::combined_loss(
    const std::vector<InteractionTuple>& batch,
    const std::vector<InteractionTuple>* partners) {
  LossBreakdown out;
  std::vector<Var> terms;
  if (weights_.lambda1 > 0.0 && weights_.prior != PriorKind::kNone) {
    Var prior = prior_term(weights_.prior, batch, partners);
    out.prior = prior.scalar();
    out.prior_evaluated = true;
    terms.push_back(weights_.lambda1 * prior);
  }
  if (weights_.lambda2 > 0.0) {
    Var policy = policy_loss(human_, policy_, batch);
    out.policy = policy.scalar();
    terms.push_back(weights_.lambda2 * policy);
  }
  if (weights_.lambda3 > 0.0) {
    Var decoder = decoder_loss(decoder_, policy_, human_, *env_, batch, weights_.k);
    out.decoder = decoder.scalar();
    terms.push_back(weights_.lambda3 * decoder);
  }
  if (terms.empty()) {
    out.total = Var::constant(Matrix::Zero(1, 1));
    return out;
  }
  out.total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) out.total = out.total + terms[i];
  return out;
}

TrainStats InterfaceLearner::train_step(int gradient_steps, int batch_size) {
  TrainStats stats;
  if (buffer_.empty()) {
    stats.skipped = true;
    return stats;
  }
  const bool needs_partners = weights_.lambda1 > 0.0 &&
                              weights_.prior == PriorKind::kProportionality;
  for (int g = 0; g < gradient_steps; ++g) {
    auto batch = buffer_.sample(batch_size, rng_);
    std::optional<std::vector<InteractionTuple>> partners;
    if (needs_partners) partners = buffer_.sample(batch_size, rng_);
    LossBreakdown loss = combined_loss(*batch, partners ? &*partners : nullptr);
    loss.total.backward();
    optimizer_.step();
    stats.prior += loss.prior;
    stats.policy += loss.policy;
    stats.decoder += loss.decoder;
    stats.total += loss.total.scalar();
    ++stats.steps;
  }
  if (stats.steps > 0) {
    stats.prior /= stats.steps;
    stats.policy /= stats.steps;
    stats.decoder /= stats.steps;
    stats.total /= stats.steps;
  }
  return stats;
}

PriorFitResult fit_prior(InterfacePolicy& policy, const Environment& env,
                         PriorKind kind, int max_steps, int batch_size,
                         double learning_rate, double gamma,
                         std::mt19937_64& rng, const PriorSampler* sampler) {
  PriorFitResult result;
  if (kind == PriorKind::kNone || max_steps <= 0) return result;
  if (kind == PriorKind::kGeneric && (!sampler || !*sampler)) {
    throw UsageError("generic prior needs a sampler");
  }
  Optimizer opt(policy.net().parameters(),
                OptimizerConfig{.learning_rate = learning_rate});
  for (int step = 0; step < max_steps; ++step) {
    std::vector<InteractionTuple> batch(batch_size);
    for (auto& tuple : batch) {
      auto [s, theta] = env.reset(rng);
      tuple.s = std::move(s);
      tuple.theta = std::move(theta);
    }
    Var loss;
    switch (kind) {
      case PriorKind::kConvexity:
        loss = prior_loss_convexity(policy, batch);
        break;
      case PriorKind::kProportionality: {
        std::vector<ProportionalityTriple> triples;
        triples.reserve(batch.size());
        for (const auto& tuple : batch) {
          triples.push_back({tuple.s, tuple.theta, env.sample_theta(rng)});
        }
        loss = prior_loss_proportionality(policy, triples, gamma);
        break;
      }
      case PriorKind::kGeneric:
        loss = prior_loss_generic(policy, batch, *sampler);
        break;
      case PriorKind::kNone:
        return result;
    }
    result.loss = loss.scalar();
    if (result.loss < 1e-3) {
      result.converged = true;
      break;
    }
    loss.backward();
    opt.step();
    ++result.steps;
  }
  return result;
}

PriorFitResult InterfaceLearner::initialize_with_prior(PriorKind kind,
                                                       int pretrain_steps) {
  const PriorFitResult result =
      fit_prior(policy_, *env_, kind, pretrain_steps, schedule_.batch_size,
                schedule_.learning_rate, weights_.gamma, prior_rng_, &sampler_);
  // Pretraining gradients must not leak into the online optimizer.
  optimizer_.zero_grad();
  return result;
}

std::vector<double> InterfaceLearner::flat_weights() const {
  std::vector<double> out;
  for (const auto& p : optimizer_.parameters()) {
    out.insert(out.end(), p.value().data(), p.value().data() + p.value().size());
  }
  return out;
}

double antisymmetry_residual(const InterfacePolicy& policy, const Environment& env,
                             std::mt19937_64& rng, int samples) {
  Matrix states(samples, env.state_dim());
  Matrix theta(samples, env.theta_dim());
  for (int i = 0; i < samples; ++i) {
    auto [s, th] = env.reset(rng);
    states.row(i) = s.transpose();
    theta.row(i) = th.transpose();
  }
  const Matrix sum = policy.evaluate(states, theta) + policy.evaluate(states, -theta);
  return sum.rowwise().norm().mean();
}

namespace {

std::vector<int> bin_rows(const std::vector<Vector>& values, int bins) {
  const Eigen::Index dim = values.front().size();
  Vector lo = values.front();
  Vector hi = values.front();
  for (const auto& v : values) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  // One integer code per row: mixed-radix over components.
  std::vector<int> codes;
  codes.reserve(values.size());
  for (const auto& v : values) {
    int code = 0;
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double width = hi[c] - lo[c];
      int b = width > 0.0 ? static_cast<int>((v[c] - lo[c]) / width * bins) : 0;
      b = std::min(b, bins - 1);
      code = code * bins + b;
    }
    codes.push_back(code);
  }
  return codes;
}

}  // namespace

std::optional<double> mi_diagnostic(const ReplayBuffer& buffer, int bins) {
  if (buffer.size() < 100) return std::nullopt;
  if (bins < 1) throw UsageError("mi_diagnostic needs at least one bin");
  std::vector<Vector> actions;
  std::vector<Vector> thetas;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    actions.push_back(buffer.at(i).a);
    thetas.push_back(buffer.at(i).theta);
  }
  const auto a_codes = bin_rows(actions, bins);
  const auto t_codes = bin_rows(thetas, bins);
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa;
  std::map<int, double> pt;
  const double n = static_cast<double>(buffer.size());
  for (std::size_t i = 0; i < a_codes.size(); ++i) {
    joint[{a_codes[i], t_codes[i]}] += 1.0 / n;
    pa[a_codes[i]] += 1.0 / n;
    pt[t_codes[i]] += 1.0 / n;
  }
  double mi = 0.0;
  for (const auto& [key, p] : joint) {
    mi += p * std::log(p / (pa[key.first] * pt[key.second]));
  }
  return std::max(0.0, mi);
}

}  // namespace coadapt
