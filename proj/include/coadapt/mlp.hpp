#pragma once

#include <random>
#include <string>
#include <vector>

#include "coadapt/autodiff.hpp"

namespace coadapt {

enum class OutputActivation { kNone, kTanh };

// How a forward pass treats the network's own weights.
enum class ParamUse {
  kTrack,     // weights are tape parameters and receive gradients
  kConstant,  // weights enter the tape as constants; input gradients still flow
};

struct Layer {
  Var weight;  // in x out
  Var bias;    // 1 x out
};

// Fully connected network with tanh hidden units.
class Mlp {
 public:
  Mlp() = default;
  // `widths` lists input width, hidden widths and output width.
  Mlp(std::vector<int> widths, OutputActivation output, std::mt19937_64& rng,
      const std::string& name = "mlp");

  Var forward(const Var& input, ParamUse use = ParamUse::kTrack) const;
  // Tape-free evaluation for inference.
  Matrix evaluate(const Matrix& input) const;

  std::vector<Var> parameters() const;
  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }
  OutputActivation output_activation() const { return output_; }
  int input_width() const;
  int output_width() const;

  // Deep copy; the copy's weights are independent tape parameters.
  Mlp clone() const;

 private:
  std::vector<Layer> layers_;
  OutputActivation output_ = OutputActivation::kNone;
};

}  // namespace coadapt
