#include "coadapt/optimizer.hpp"

#include <cmath>

namespace coadapt {

Optimizer::Optimizer(std::vector<Var> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate >= 0.0)) {
    throw UsageError("learning rate must be non-negative");
  }
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw UsageError("optimizer given a constant");
    first_.push_back(Matrix::Zero(p.rows(), p.cols()));
    second_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Optimizer::step() {
  for (const auto& p : params_) {
    if (!p.grad().allFinite()) {
      throw TrainingError("non-finite gradient in parameter '" + p.name() + "'");
    }
  }
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.rule == UpdateRule::kSgd) {
    for (auto& p : params_) p.mutable_value() -= lr * p.grad();
  } else {
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const Matrix& g = params_[i].grad();
      first_[i] = b1 * first_[i] + (1.0 - b1) * g;
      second_[i] = b2 * second_[i] + (1.0 - b2) * g.cwiseProduct(g);
      params_[i].mutable_value().array() -=
          lr * (first_[i].array() / c1) /
          ((second_[i].array() / c2).sqrt() + config_.epsilon);
    }
  }
  zero_grad();
}

}  // namespace coadapt
