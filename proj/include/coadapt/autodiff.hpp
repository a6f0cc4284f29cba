#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace coadapt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Raised when a tape or network is used with inconsistent shapes or a
// non-scalar root.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when training produces non-finite numbers.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Node {
  Matrix data;
  Matrix grad;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents.
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  std::string name;
};

}  // namespace detail

// A node on the reverse-mode tape. Copies share the underlying node.
//
// Data is a dense matrix; batched quantities put samples in rows and
// features in columns. A Var built from `constant()` never receives a
// gradient, and neither does anything computed only from constants.
class Var {
 public:
  Var() = default;

  static Var constant(Matrix data);
  static Var parameter(Matrix data, std::string name);

  const Matrix& value() const { return node_->data; }
  Matrix& mutable_value() { return node_->data; }
  const Matrix& grad() const { return node_->grad; }
  Matrix& mutable_grad() { return node_->grad; }
  const std::string& name() const { return node_->name; }

  Eigen::Index rows() const { return node_->data.rows(); }
  Eigen::Index cols() const { return node_->data.cols(); }
  double scalar() const;
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return static_cast<bool>(node_); }

  void zero_grad() { node_->grad.setZero(); }

  // Populates grad on every node reachable from this scalar root.
  void backward() const;

  // Internal constructor used by the operation library.
  static Var make(Matrix data, std::vector<Var> parents,
                  std::function<void(detail::Node&)> backward);

 private:
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct VarAccess;
};

// Elementwise and matrix operations. Shapes must match exactly unless noted.
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(double c, const Var& a);
Var hadamard(const Var& a, const Var& b);
Var matmul(const Var& a, const Var& b);
// a (n x m) plus row vector b (1 x m) added to every row.
Var add_row(const Var& a, const Var& b);
// a (n x m) with each row scaled by the matching entry of column c (n x 1).
Var scale_rows(const Var& a, const Var& c);
Var tanh(const Var& a);
Matrix tanh_values(const Matrix& x);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
// Clamp with a pass-through gradient strictly inside the bounds.
Var clamp(const Var& a, double lo, double hi);
// Sum of all entries, 1 x 1.
Var sum(const Var& a);
// Row sums, n x 1.
Var row_sum(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
// Same value, cut from the tape.
Var detach(const Var& a);

// Sum over all entries of (a - b)^2.
Var squared_error(const Var& a, const Var& b);

}  // namespace coadapt
