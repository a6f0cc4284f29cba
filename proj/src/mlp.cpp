#include "coadapt/mlp.hpp"

#include <cmath>

namespace coadapt {

Mlp::Mlp(std::vector<int> widths, OutputActivation output,
         std::mt19937_64& rng, const std::string& name)
    : output_(output) {
  if (widths.size() < 2) throw UsageError("Mlp needs at least two widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i];
    const int out = widths[i + 1];
    if (in <= 0 || out <= 0) throw UsageError("Mlp widths must be positive");
    // Glorot uniform.
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(in, out);
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
    }
    const std::string tag = name + ".layer" + std::to_string(i);
    layers_.push_back({Var::parameter(std::move(w), tag + ".weight"),
                       Var::parameter(Matrix::Zero(1, out), tag + ".bias")});
  }
}

int Mlp::input_width() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.rows());
}

int Mlp::output_width() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().bias.cols());
}

Var Mlp::forward(const Var& input, ParamUse use) const {
  if (input.cols() != input_width()) {
    throw UsageError("Mlp::forward: input width " +
                     std::to_string(input.cols()) + ", expected " +
                     std::to_string(input_width()));
  }
  Var h = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    Var w = use == ParamUse::kTrack ? layer.weight : detach(layer.weight);
    Var b = use == ParamUse::kTrack ? layer.bias : detach(layer.bias);
    h = add_row(matmul(h, w), b);
    const bool last = i + 1 == layers_.size();
    if (!last || output_ == OutputActivation::kTanh) h = tanh(h);
  }
  return h;
}

Matrix Mlp::evaluate(const Matrix& input) const {
  if (input.cols() != input_width()) {
    throw UsageError("Mlp::evaluate: input width " +
                     std::to_string(input.cols()) + ", expected " +
                     std::to_string(input_width()));
  }
  Matrix h = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix next = h * layers_[i].weight.value();
    next.rowwise() += layers_[i].bias.value().row(0);
    const bool last = i + 1 == layers_.size();
    if (!last || output_ == OutputActivation::kTanh) {
      next = tanh_values(next);
    }
    h = std::move(next);
  }
  return h;
}

std::vector<Var> Mlp::parameters() const {
  std::vector<Var> out;
  out.reserve(layers_.size() * 2);
  for (const auto& layer : layers_) {
    out.push_back(layer.weight);
    out.push_back(layer.bias);
  }
  return out;
}

Mlp Mlp::clone() const {
  Mlp copy;
  copy.output_ = output_;
  for (const auto& layer : layers_) {
    copy.layers_.push_back({Var::parameter(layer.weight.value(), layer.weight.name()),
                            Var::parameter(layer.bias.value(), layer.bias.name())});
  }
  return copy;
}

}  // namespace coadapt
