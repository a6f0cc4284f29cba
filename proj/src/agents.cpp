#include "coadapt/agents.hpp"

#include <sstream>

#include "coadapt/format.hpp"

namespace coadapt {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kBayes: return "bayes";
    case Algorithm::kProp: return "prop";
    case Algorithm::kConv: return "conv";
    case Algorithm::kLimit: return "limit";
    case Algorithm::kOursP: return "ours-p";
    case Algorithm::kOursC: return "ours-c";
  }
  return "limit";
}

Algorithm algorithm_from_string(const std::string& name) {
  for (Algorithm a : all_algorithms()) {
    if (to_string(a) == name) return a;
  }
  throw UsageError("unknown algorithm '" + name + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> kAll{Algorithm::kBayes, Algorithm::kProp,
                                           Algorithm::kConv,  Algorithm::kLimit,
                                           Algorithm::kOursP, Algorithm::kOursC};
  return kAll;
}

std::optional<HumanStructure> own_structure(Algorithm a) {
  switch (a) {
    case Algorithm::kBayes: return HumanStructure::kBayesLinear;
    case Algorithm::kProp:
    case Algorithm::kOursP: return HumanStructure::kProportional;
    case Algorithm::kConv:
    case Algorithm::kOursC: return HumanStructure::kConvex;
    case Algorithm::kLimit: return std::nullopt;
  }
  return std::nullopt;
}

HumanStructure default_human_structure(Algorithm a) {
  const auto own = own_structure(a);
  for (HumanStructure s : {HumanStructure::kBayesLinear,
                           HumanStructure::kProportional, HumanStructure::kConvex}) {
    if (!own || *own != s) return s;
  }
  return HumanStructure::kRandom;
}

LossWeights effective_weights(Algorithm a, const LossWeights& configured) {
  LossWeights w = configured;
  switch (a) {
    case Algorithm::kLimit:
      w = limit_config(configured.k);
      w.lambda2 = configured.lambda2;
      w.lambda3 = configured.lambda3;
      break;
    case Algorithm::kOursC:
    case Algorithm::kConv:
      w.prior = PriorKind::kConvexity;
      break;
    case Algorithm::kOursP:
    case Algorithm::kProp:
      w.prior = PriorKind::kProportionality;
      break;
    case Algorithm::kBayes:
      w.prior = PriorKind::kNone;
      break;
  }
  return w;
}

// ------------------------------------------------------------------ learned

LearnedAgent::LearnedAgent(Algorithm algorithm, const Environment& env,
                           const AgentSettings& settings, std::uint64_t seed)
    : algorithm_(algorithm),
      learner_(env, effective_weights(algorithm, settings.weights), settings.sizes,
               settings.schedule, seed) {
  if (algorithm != Algorithm::kLimit && algorithm != Algorithm::kOursC &&
      algorithm != Algorithm::kOursP) {
    throw UsageError("LearnedAgent only runs limit, ours-p and ours-c");
  }
  // A zero prior weight removes the prior from initialization as well.
  const LossWeights& w = learner_.weights();
  learner_.initialize_with_prior(w.lambda1 > 0.0 ? w.prior : PriorKind::kNone,
                                 settings.schedule.prior_pretrain_steps);
}

Signal LearnedAgent::signal(const State& s, const HiddenInfo& theta) const {
  return learner_.emit_signal(s, theta);
}

void LearnedAgent::record(const InteractionTuple& tuple) { learner_.push(tuple); }

TrainStats LearnedAgent::finish_interaction(const Episode&, double) {
  return learner_.train_step();
}

std::vector<double> LearnedAgent::flat_weights() const {
  return learner_.flat_weights();
}

// --------------------------------------------------------------- prior-only

PriorOnlyAgent::PriorOnlyAgent(Algorithm algorithm, const Environment& env,
                               const AgentSettings& settings, std::uint64_t seed)
    : algorithm_(algorithm),
      policy_(prior_only_interface(
          env,
          algorithm == Algorithm::kConv ? PriorKind::kConvexity
                                        : PriorKind::kProportionality,
          settings.sizes, settings.schedule, settings.weights.gamma, seed)) {
  if (algorithm != Algorithm::kConv && algorithm != Algorithm::kProp) {
    throw UsageError("PriorOnlyAgent only runs prop and conv");
  }
}

Signal PriorOnlyAgent::signal(const State& s, const HiddenInfo& theta) const {
  return policy_.emit_signal(s, theta);
}

TrainStats PriorOnlyAgent::finish_interaction(const Episode&, double) {
  TrainStats stats;
  stats.skipped = true;
  return stats;
}

std::vector<double> PriorOnlyAgent::flat_weights() const {
  std::vector<double> out;
  for (const auto& p : policy_.net().parameters()) {
    out.insert(out.end(), p.value().data(), p.value().data() + p.value().size());
  }
  return out;
}

// -------------------------------------------------------------------- Bayes

namespace {

Matrix reshape_point(const Environment& env, const Vector& point) {
  return Eigen::Map<const Matrix>(point.data(), env.signal_dim(),
                                  env.state_dim() + env.theta_dim());
}

std::mt19937_64 bayes_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0xba1e5U};
  return std::mt19937_64(seq);
}

}  // namespace

BayesAgent::BayesAgent(const Environment& env, const AgentSettings& settings,
                       std::uint64_t seed)
    : env_(&env),
      rng_(bayes_rng(seed)),
      optimizer_(LinearInterface::parameter_count(env), settings.bayes),
      current_(env, reshape_point(env, optimizer_.propose(rng_))) {}

Signal BayesAgent::signal(const State& s, const HiddenInfo& theta) const {
  return current_.emit_signal(s, theta);
}

TrainStats BayesAgent::finish_interaction(const Episode&, double metric) {
  const Matrix& a = current_.matrix();
  const Vector point = Eigen::Map<const Vector>(a.data(), a.size());
  const double reward = -metric;
  if (optimizer_.observe(point, reward)) {
    log_.push_back({static_cast<std::int64_t>(log_.size()), point, reward});
  }
  current_ = LinearInterface(*env_, reshape_point(*env_, optimizer_.propose(rng_)));
  TrainStats stats;
  stats.skipped = true;
  return stats;
}

std::vector<double> BayesAgent::flat_weights() const {
  const Matrix& a = current_.matrix();
  return std::vector<double>(a.data(), a.data() + a.size());
}

std::unique_ptr<InterfaceAgent> make_agent(Algorithm algorithm,
                                           const Environment& env,
                                           const AgentSettings& settings,
                                           std::uint64_t seed) {
  switch (algorithm) {
    case Algorithm::kBayes:
      return std::make_unique<BayesAgent>(env, settings, seed);
    case Algorithm::kProp:
    case Algorithm::kConv:
      return std::make_unique<PriorOnlyAgent>(algorithm, env, settings, seed);
    case Algorithm::kLimit:
    case Algorithm::kOursP:
    case Algorithm::kOursC:
      return std::make_unique<LearnedAgent>(algorithm, env, settings, seed);
  }
  throw UsageError("unknown algorithm");
}

std::string bayes_log_csv(const std::vector<BayesLogRow>& log) {
  std::ostringstream out;
  out << "proposal";
  const Eigen::Index dim = log.empty() ? 0 : log.front().a.size();
  for (Eigen::Index i = 0; i < dim; ++i) out << ",a" << i;
  out << ",reward\n";
  for (const auto& row : log) {
    out << row.proposal;
    for (Eigen::Index i = 0; i < row.a.size(); ++i) out << ',' << format_double(row.a[i]);
    out << ',' << format_double(row.reward) << '\n';
  }
  return out.str();
}

}  // namespace coadapt
