#include "coadapt/autodiff.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

namespace coadapt {

using detail::Node;

struct VarAccess {
  static const std::shared_ptr<Node>& node(const Var& v) { return v.node_; }
};

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw UsageError(std::string(op) + ": shape mismatch (" +
                     std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

Var Var::constant(Matrix data) {
  auto node = std::make_shared<Node>();
  node->data = std::move(data);
  return Var(std::move(node));
}

Var Var::parameter(Matrix data, std::string name) {
  auto node = std::make_shared<Node>();
  node->grad = Matrix::Zero(data.rows(), data.cols());
  node->data = std::move(data);
  node->requires_grad = true;
  node->name = std::move(name);
  return Var(std::move(node));
}

Var Var::make(Matrix data, std::vector<Var> parents,
              std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  bool needs = false;
  node->parents.reserve(parents.size());
  for (auto& p : parents) {
    needs = needs || p.requires_grad();
    node->parents.push_back(std::move(p.node_));
  }
  if (needs) {
    // Gradient storage is sized and zeroed by backward().
    node->backward = std::move(backward);
    node->requires_grad = true;
  } else {
    // Nothing upstream can receive a gradient; drop the history.
    node->parents.clear();
  }
  node->data = std::move(data);
  return Var(std::move(node));
}

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) {
    throw UsageError("scalar(): value is not 1x1");
  }
  return node_->data(0, 0);
}

void Var::backward() const {
  if (rows() != 1 || cols() != 1) {
    throw UsageError("backward(): root must be a scalar");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order with every node
  // visited once.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->backward) n->grad.setZero(n->data.rows(), n->data.cols());
  }
  node_->grad.setConstant(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

Var operator+(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return Var::make(a.value() + b.value(), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (parent(self, i).requires_grad) parent(self, i).grad += self.grad;
    }
  });
}

Var operator-(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return Var::make(a.value() - b.value(), {a, b}, [](Node& self) {
    if (parent(self, 0).requires_grad) parent(self, 0).grad += self.grad;
    if (parent(self, 1).requires_grad) parent(self, 1).grad -= self.grad;
  });
}

Var operator-(const Var& a) { return -1.0 * a; }

Var operator*(double c, const Var& a) {
  return Var::make(c * a.value(), {a},
                   [c](Node& self) { parent(self, 0).grad += c * self.grad; });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a, b, "hadamard");
  return Var::make(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& y = parent(self, 1);
    if (x.requires_grad) x.grad += self.grad.cwiseProduct(y.data);
    if (y.requires_grad) y.grad += self.grad.cwiseProduct(x.data);
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw UsageError("matmul: inner dimensions differ (" +
                     std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + ")");
  }
  return Var::make(a.value() * b.value(), {a, b}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& y = parent(self, 1);
    if (x.requires_grad) x.grad.noalias() += self.grad * y.data.transpose();
    if (y.requires_grad) y.grad.noalias() += x.data.transpose() * self.grad;
  });
}

Var add_row(const Var& a, const Var& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) {
    throw UsageError("add_row: bias must be 1x" + std::to_string(a.cols()));
  }
  Matrix out = a.value().rowwise() + b.value().row(0);
  return Var::make(std::move(out), {a, b}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& y = parent(self, 1);
    if (x.requires_grad) x.grad += self.grad;
    if (y.requires_grad) y.grad += self.grad.colwise().sum();
  });
}

Var scale_rows(const Var& a, const Var& c) {
  if (c.cols() != 1 || c.rows() != a.rows()) {
    throw UsageError("scale_rows: scale must be a column of matching height");
  }
  Matrix out = c.value().col(0).asDiagonal() * a.value();
  return Var::make(std::move(out), {a, c}, [](Node& self) {
    Node& x = parent(self, 0);
    Node& s = parent(self, 1);
    if (x.requires_grad) x.grad += s.data.col(0).asDiagonal() * self.grad;
    if (s.requires_grad) {
      s.grad += self.grad.cwiseProduct(x.data).rowwise().sum();
    }
  });
}

Matrix tanh_values(const Matrix& x) {
  // Eigen vectorizes exp but not double tanh. Near zero the exp form
  // cancels, so those entries take the odd series instead.
  Matrix out = (1.0 - 2.0 / ((2.0 * x.array()).exp() + 1.0)).matrix();
  const double* in = x.data();
  double* o = out.data();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = in[i];
    if (std::abs(v) < 1e-2) {
      const double v2 = v * v;
      o[i] = v * (1.0 + v2 * (-1.0 / 3.0 + v2 * (2.0 / 15.0 - v2 * (17.0 / 315.0))));
    }
  }
  return out;
}

Var tanh(const Var& a) {
  Matrix out = tanh_values(a.value());
  return Var::make(std::move(out), {a}, [](Node& self) {
    parent(self, 0).grad.array() +=
        self.grad.array() * (1.0 - self.data.array().square());
  });
}

Var sigmoid(const Var& a) {
  Matrix out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return Var::make(std::move(out), {a}, [](Node& self) {
    parent(self, 0).grad.array() +=
        self.grad.array() * self.data.array() * (1.0 - self.data.array());
  });
}

Var exp(const Var& a) {
  Matrix out = a.value().array().exp().matrix();
  return Var::make(std::move(out), {a}, [](Node& self) {
    parent(self, 0).grad.array() += self.grad.array() * self.data.array();
  });
}

Var square(const Var& a) {
  Matrix out = a.value().array().square().matrix();
  return Var::make(std::move(out), {a}, [](Node& self) {
    Node& x = parent(self, 0);
    x.grad.array() += 2.0 * self.grad.array() * x.data.array();
  });
}

Var clamp(const Var& a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return Var::make(std::move(out), {a}, [lo, hi](Node& self) {
    Node& x = parent(self, 0);
    x.grad.array() +=
        self.grad.array() *
        ((x.data.array() > lo) && (x.data.array() < hi)).cast<double>();
  });
}

Var sum(const Var& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return Var::make(std::move(out), {a}, [](Node& self) {
    parent(self, 0).grad.array() += self.grad(0, 0);
  });
}

Var row_sum(const Var& a) {
  Matrix out = a.value().rowwise().sum();
  return Var::make(std::move(out), {a}, [](Node& self) {
    parent(self, 0).grad.colwise() += self.grad.col(0);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw UsageError("concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return Var::make(std::move(out), parts, [](Node& self) {
    Eigen::Index offset = 0;
    for (auto& p : self.parents) {
      const Eigen::Index width = p->data.cols();
      if (p->requires_grad) p->grad += self.grad.middleCols(offset, width);
      offset += width;
    }
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw UsageError("slice_cols: range out of bounds");
  }
  Matrix out = a.value().middleCols(start, count);
  return Var::make(std::move(out), {a}, [start, count](Node& self) {
    parent(self, 0).grad.middleCols(start, count) += self.grad;
  });
}

Var detach(const Var& a) { return Var::constant(a.value()); }

Var squared_error(const Var& a, const Var& b) { return sum(square(a - b)); }

}  // namespace coadapt
