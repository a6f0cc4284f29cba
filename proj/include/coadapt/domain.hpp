#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "coadapt/autodiff.hpp"

namespace coadapt {

// System state s. Treasure: position in [-10, 10]^n. Highway: (human_lane,
// robot_lane, prev_human_lane) with each entry in {0, 1}.
using State = Vector;
// Hidden information theta known only to the robot.
using HiddenInfo = Vector;
// Interface signal x, every component in (-1, 1).
using Signal = Vector;
// Human action a.
using Action = Vector;

struct InteractionTuple {
  State s;
  Action a;
  Signal x;
  HiddenInfo theta;
  std::int64_t interaction = 0;
  int t = 0;

  bool operator==(const InteractionTuple&) const = default;
};

nlohmann::json to_json_line(const InteractionTuple& tuple);
InteractionTuple tuple_from_json(const nlohmann::json& j);

// Counterfactual rollout {(s, a)^0, ..., (s, a)^k} for a batch of start
// points. Row b of states[t] / actions[t] belongs to sample b.
struct Trajectory {
  std::vector<Var> states;
  std::vector<Var> actions;
  Matrix theta;

  std::size_t length() const { return states.size(); }
};

struct BufferDims {
  int state = 0;
  int action = 0;
  int signal = 0;
  int theta = 0;
};

// Fixed-capacity FIFO of interaction tuples; evicts oldest first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(BufferDims dims, std::size_t capacity = 5000);

  void push(InteractionTuple tuple);
  // Uniform with replacement. Returns nullopt when the buffer is empty.
  std::optional<std::vector<InteractionTuple>> sample(std::size_t batch_size,
                                                      std::mt19937_64& rng) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  const BufferDims& dims() const { return dims_; }
  // i = 0 is the oldest tuple still held.
  const InteractionTuple& at(std::size_t i) const;
  std::vector<InteractionTuple> contents() const;
  void clear();

 private:
  BufferDims dims_;
  std::size_t capacity_;
  std::vector<InteractionTuple> slots_;
  std::size_t head_ = 0;  // index of the oldest element
  std::size_t size_ = 0;
};

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

}  // namespace coadapt
