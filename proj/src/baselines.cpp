#include "coadapt/baselines.hpp"

#include <cmath>
#include <limits>

namespace coadapt {

LinearInterface::LinearInterface(const Environment& env, Matrix a)
    : env_(&env), a_(std::move(a)) {
  if (a_.rows() != env.signal_dim() ||
      a_.cols() != env.state_dim() + env.theta_dim()) {
    throw UsageError("linear interface matrix has the wrong shape");
  }
}

Signal LinearInterface::emit_signal(const State& s, const HiddenInfo& theta) const {
  Vector features(s.size() + theta.size());
  features << s / env_->state_scale(), theta / env_->theta_scale();
  return (a_ * features).cwiseMax(-1.0).cwiseMin(1.0);
}

// ------------------------------------------------------------------------ GP

GaussianProcess::GaussianProcess(double length_scale, double noise)
    : length_scale_(length_scale), noise_(noise) {}

double GaussianProcess::kernel(const Vector& a, const Vector& b) const {
  return std::exp(-0.5 * (a - b).squaredNorm() / (length_scale_ * length_scale_));
}

bool GaussianProcess::fit(const Matrix& inputs, const Vector& targets) {
  fitted_ = false;
  const Eigen::Index n = inputs.rows();
  if (n == 0) return false;
  inputs_ = inputs;
  y_mean_ = targets.mean();
  const double var =
      n > 1 ? (targets.array() - y_mean_).square().sum() / (n - 1) : 0.0;
  y_scale_ = var > 1e-12 ? std::sqrt(var) : 1.0;
  const Vector y = (targets.array() - y_mean_) / y_scale_;

  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = kernel(inputs.row(i).transpose(), inputs.row(j).transpose());
    }
  }
  jitter_ = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Matrix regularized = k;
    regularized.diagonal().array() += noise_ + jitter_;
    chol_.compute(regularized);
    if (chol_.info() == Eigen::Success) {
      alpha_ = chol_.solve(y);
      fitted_ = alpha_.allFinite();
      if (fitted_) return true;
    }
    jitter_ = jitter_ == 0.0 ? 1e-8 : jitter_ * 100.0;
  }
  return false;
}

std::pair<double, double> GaussianProcess::predict(const Vector& x) const {
  if (!fitted_) return {y_mean_, y_scale_ * y_scale_};
  const Eigen::Index n = inputs_.rows();
  Vector kx(n);
  for (Eigen::Index i = 0; i < n; ++i) kx[i] = kernel(inputs_.row(i).transpose(), x);
  const double mean = kx.dot(alpha_);
  const Vector v = chol_.matrixL().solve(kx);
  const double var = std::max(1.0 - v.squaredNorm(), 1e-12);
  return {y_mean_ + y_scale_ * mean, y_scale_ * y_scale_ * var};
}

// ------------------------------------------------------------------- BayesOpt

BayesOptimizer::BayesOptimizer(int dim, BayesConfig config)
    : dim_(dim), config_(config), gp_(config.length_scale, config.noise) {
  if (dim <= 0) throw UsageError("Bayes search space must be non-empty");
}

Vector BayesOptimizer::random_point(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(-config_.box, config_.box);
  Vector p(dim_);
  for (int i = 0; i < dim_; ++i) p[i] = u(rng);
  return p;
}

double BayesOptimizer::expected_improvement(const Vector& x) const {
  const auto [mean, var] = gp_.predict(x);
  const double sd = std::sqrt(var);
  const double improvement = mean - best_reward_;
  if (sd < 1e-12) return std::max(improvement, 0.0);
  const double z = improvement / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return improvement * cdf + sd * pdf;
}

Vector BayesOptimizer::propose(std::mt19937_64& rng) {
  if (static_cast<int>(points_.size()) < config_.initial_random) {
    return random_point(rng);
  }
  if (!gp_.fitted()) {
    ++fallbacks_;
    return random_point(rng);
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector best = random_point(rng);
  double best_ei = -1.0;
  for (int r = 0; r < config_.restarts; ++r) {
    // Half the restarts start from the incumbent, the rest at random.
    Vector x = (r % 2 == 0 && best_point_.size() == dim_) ? best_point_
                                                           : random_point(rng);
    double ei = expected_improvement(x);
    double step = 0.25 * config_.box;
    for (int i = 0; i < config_.local_steps; ++i) {
      Vector candidate = x;
      for (int d = 0; d < dim_; ++d) candidate[d] += step * gauss(rng);
      candidate = candidate.cwiseMax(-config_.box).cwiseMin(config_.box);
      const double candidate_ei = expected_improvement(candidate);
      if (candidate_ei > ei) {
        x = std::move(candidate);
        ei = candidate_ei;
      } else {
        step *= 0.85;
      }
    }
    if (ei > best_ei) {
      best_ei = ei;
      best = x;
    }
  }
  return best;
}

bool BayesOptimizer::observe(const Vector& point, double reward) {
  if (!std::isfinite(reward) || point.size() != dim_) return false;
  points_.push_back(point);
  rewards_.push_back(reward);
  if (reward > best_reward_) {
    best_reward_ = reward;
    best_point_ = point;
  }
  refit();
  return true;
}

void BayesOptimizer::refit() {
  const std::size_t n = points_.size();
  const std::size_t keep =
      std::min<std::size_t>(n, static_cast<std::size_t>(config_.max_history));
  Matrix inputs(keep, dim_);
  Vector targets(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    inputs.row(i) = points_[n - keep + i].transpose();
    targets[i] = rewards_[n - keep + i];
  }
  gp_.fit(inputs, targets);
}

// ----------------------------------------------------------- prior-only, LIMIT

InterfacePolicy prior_only_interface(const Environment& env, PriorKind kind,
                                     const NetworkSizes& sizes,
                                     const TrainSchedule& schedule, double gamma,
                                     std::uint64_t seed) {
  if (kind != PriorKind::kProportionality && kind != PriorKind::kConvexity) {
    throw UsageError("prior-only interface needs proportionality or convexity");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x70a1U};
  std::mt19937_64 rng(seq);
  InterfacePolicy policy(env, sizes.policy_hidden, rng);
  fit_prior(policy, env, kind, schedule.prior_pretrain_steps, schedule.batch_size,
            schedule.learning_rate, gamma, rng);
  return policy;
}

LossWeights limit_config(int k) {
  LossWeights w;
  w.lambda1 = 0.0;
  w.lambda2 = 1.0;
  w.lambda3 = 1.0;
  w.k = k;
  w.prior = PriorKind::kNone;
  return w;
}

}  // namespace coadapt
