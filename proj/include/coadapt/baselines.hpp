#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "coadapt/environment.hpp"
#include "coadapt/interface_learning.hpp"

namespace coadapt {

// x = clamp(A [s; theta], -1, 1), with s and theta in network units
// (divided by the environment's scales).
class LinearInterface {
 public:
  LinearInterface(const Environment& env, Matrix a);

  Signal emit_signal(const State& s, const HiddenInfo& theta) const;
  const Matrix& matrix() const { return a_; }
  static int parameter_count(const Environment& env) {
    return env.signal_dim() * (env.state_dim() + env.theta_dim());
  }

 private:
  const Environment* env_;
  Matrix a_;
};

// Zero-mean GP regression with an RBF kernel on standardized targets.
class GaussianProcess {
 public:
  GaussianProcess(double length_scale, double noise);

  // Returns false if the kernel could not be factorized even with jitter.
  bool fit(const Matrix& inputs, const Vector& targets);
  // Posterior mean and variance in target units.
  std::pair<double, double> predict(const Vector& x) const;
  bool fitted() const { return fitted_; }
  double jitter() const { return jitter_; }

 private:
  double kernel(const Vector& a, const Vector& b) const;

  double length_scale_;
  double noise_;
  double jitter_ = 0.0;
  Matrix inputs_;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  bool fitted_ = false;
};

struct BayesConfig {
  double length_scale = 0.5;
  double noise = 1e-2;
  int restarts = 16;
  int local_steps = 25;
  int initial_random = 5;
  // Most recent observations kept in the surrogate.
  int max_history = 300;
  double box = 1.0;
};

// Expected-improvement Bayesian optimization over a flattened matrix in the
// box [-box, box]^dim, maximizing observed reward.
class BayesOptimizer {
 public:
  BayesOptimizer(int dim, BayesConfig config = {});

  Vector propose(std::mt19937_64& rng);
  // Rejects (returns false) non-finite rewards.
  bool observe(const Vector& point, double reward);

  std::size_t observations() const { return points_.size(); }
  double best_reward() const { return best_reward_; }
  const Vector& best_point() const { return best_point_; }
  const std::vector<Vector>& points() const { return points_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const GaussianProcess& surrogate() const { return gp_; }
  std::int64_t fallback_proposals() const { return fallbacks_; }
  int dim() const { return dim_; }

  double expected_improvement(const Vector& x) const;

 private:
  void refit();
  Vector random_point(std::mt19937_64& rng) const;

  int dim_;
  BayesConfig config_;
  GaussianProcess gp_;
  std::vector<Vector> points_;
  std::vector<double> rewards_;
  double best_reward_ = -std::numeric_limits<double>::infinity();
  Vector best_point_;
  std::int64_t fallbacks_ = 0;
};

// Prior-only interface: initialized from the prior, never updated online.
InterfacePolicy prior_only_interface(const Environment& env, PriorKind kind,
                                     const NetworkSizes& sizes,
                                     const TrainSchedule& schedule,
                                     double gamma, std::uint64_t seed);

// End-to-end correlation maximization without any prior term.
LossWeights limit_config(int k = 10);

}  // namespace coadapt
