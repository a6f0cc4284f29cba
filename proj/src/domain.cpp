#include "coadapt/domain.hpp"

namespace coadapt {

nlohmann::json vector_to_json(const Vector& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(),
                                  static_cast<Eigen::Index>(values.size()));
}

nlohmann::json to_json_line(const InteractionTuple& tuple) {
  return {{"s", vector_to_json(tuple.s)},
          {"a", vector_to_json(tuple.a)},
          {"x", vector_to_json(tuple.x)},
          {"theta", vector_to_json(tuple.theta)},
          {"interaction", tuple.interaction},
          {"t", tuple.t}};
}

InteractionTuple tuple_from_json(const nlohmann::json& j) {
  InteractionTuple tuple;
  tuple.s = vector_from_json(j.at("s"));
  tuple.a = vector_from_json(j.at("a"));
  tuple.x = vector_from_json(j.at("x"));
  tuple.theta = vector_from_json(j.at("theta"));
  tuple.interaction = j.at("interaction").get<std::int64_t>();
  tuple.t = j.at("t").get<int>();
  return tuple;
}

ReplayBuffer::ReplayBuffer(BufferDims dims, std::size_t capacity)
    : dims_(dims), capacity_(capacity) {
  if (capacity_ == 0) throw UsageError("replay buffer capacity must be positive");
  slots_.reserve(capacity_);
}

void ReplayBuffer::push(InteractionTuple tuple) {
  if (tuple.s.size() != dims_.state || tuple.a.size() != dims_.action ||
      tuple.x.size() != dims_.signal || tuple.theta.size() != dims_.theta) {
    throw UsageError("replay buffer: tuple dimensions do not match environment");
  }
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(tuple));
    ++size_;
    return;
  }
  slots_[head_] = std::move(tuple);
  head_ = (head_ + 1) % capacity_;
}

std::optional<std::vector<InteractionTuple>> ReplayBuffer::sample(
    std::size_t batch_size, std::mt19937_64& rng) const {
  if (empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<InteractionTuple> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(at(pick(rng)));
  return batch;
}

const InteractionTuple& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("replay buffer index out of range");
  return slots_[(head_ + i) % slots_.size()];
}

std::vector<InteractionTuple> ReplayBuffer::contents() const {
  std::vector<InteractionTuple> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(at(i));
  return out;
}

void ReplayBuffer::clear() {
  slots_.clear();
  head_ = 0;
  size_ = 0;
}

}  // namespace coadapt
