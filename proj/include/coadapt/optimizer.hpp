#pragma once

#include <cstdint>
#include <vector>

#include "coadapt/autodiff.hpp"

namespace coadapt {

enum class UpdateRule { kAdam, kSgd };

struct OptimizerConfig {
  UpdateRule rule = UpdateRule::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First-order optimizer over a fixed parameter list. Moment accumulators
// mirror the parameter shapes.
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(std::vector<Var> params, OptimizerConfig config);

  // Applies one update from the accumulated gradients, then clears them.
  // Throws TrainingError naming the parameter if any gradient is not finite;
  // in that case no parameter is modified.
  void step();
  void zero_grad();

  std::int64_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  const std::vector<Var>& parameters() const { return params_; }

 private:
  std::vector<Var> params_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  OptimizerConfig config_;
  std::int64_t steps_ = 0;
};

}  // namespace coadapt
