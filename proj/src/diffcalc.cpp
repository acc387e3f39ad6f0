#include "maad/diffcalc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace maad::diffcalc {

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  int64_t n = 1;
  for (int dim : shape) n *= dim;
  if (n != int64_t(data.size()))
    throw ShapeMismatch("tensor data length " + std::to_string(data.size()) +
                        " does not match shape " + shape_str());
}

Tensor Tensor::zeros(std::vector<int> shape) {
  int64_t n = 1;
  for (int dim : shape) n *= dim;
  Tensor t;
  t.shape = std::move(shape);
  t.data.assign(size_t(n), 0.0);
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  Tensor t;
  t.shape = {1, int(values.size())};
  t.data = std::move(values);
  return t;
}

int Tensor::rows() const {
  if (shape.size() != 2) throw ShapeMismatch("expected rank-2 tensor, got " + shape_str());
  return shape[0];
}

int Tensor::cols() const {
  if (shape.size() != 2) throw ShapeMismatch("expected rank-2 tensor, got " + shape_str());
  return shape[1];
}

double& Tensor::at(int r, int c) { return data[size_t(r) * size_t(cols()) + size_t(c)]; }
double Tensor::at(int r, int c) const { return data[size_t(r) * size_t(cols()) + size_t(c)]; }

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

Var constant(Tensor value) { return std::make_shared<Node>(std::move(value)); }

namespace {

Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> back) {
  Var node = std::make_shared<Node>(std::move(value));
  node->inputs = std::move(inputs);
  node->backward_op = std::move(back);
  return node;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeMismatch(std::string(op) + ": expected " + a.shape_str() + ", got " + b.shape_str());
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  const int n = a->value.rows(), k = a->value.cols();
  const int k2 = b->value.rows(), m = b->value.cols();
  if (k != k2)
    throw ShapeMismatch("matmul: expected inner dims to agree, got " + a->value.shape_str() +
                        " x " + b->value.shape_str());
  Tensor out = Tensor::zeros({n, m});
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = a->value.at(i, p);
      if (av == 0.0) continue;
      for (int j = 0; j < m; ++j) out.at(i, j) += av * b->value.at(p, j);
    }
  return make_node(std::move(out), {a, b}, [n, k, m](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    // dA += dC * B^T ; dB += A^T * dC
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        const double g = self.grad.at(i, j);
        if (g == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          na.grad.at(i, p) += g * nb.value.at(p, j);
          nb.grad.at(p, j) += na.value.at(i, p) * g;
        }
      }
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a->value, b->value, "add");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (size_t i = 0; i < self.grad.data.size(); ++i) {
      self.inputs[0]->grad.data[i] += self.grad.data[i];
      self.inputs[1]->grad.data[i] += self.grad.data[i];
    }
  });
}

Var add_rowvec(const Var& m, const Var& row) {
  const int r = m->value.rows(), c = m->value.cols();
  if (row->value.rows() != 1 || row->value.cols() != c)
    throw ShapeMismatch("add_rowvec: expected [1," + std::to_string(c) + "], got " +
                        row->value.shape_str());
  Tensor out = m->value;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.at(i, j) += row->value.at(0, j);
  return make_node(std::move(out), {m, row}, [r, c](Node& self) {
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) {
        const double g = self.grad.at(i, j);
        self.inputs[0]->grad.at(i, j) += g;
        self.inputs[1]->grad.at(0, j) += g;
      }
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a->value, b->value, "sub");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (size_t i = 0; i < self.grad.data.size(); ++i) {
      self.inputs[0]->grad.data[i] += self.grad.data[i];
      self.inputs[1]->grad.data[i] -= self.grad.data[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a->value, b->value, "mul");
  Tensor out = a->value;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
  return make_node(std::move(out), {a, b}, [](Node& self) {
    for (size_t i = 0; i < self.grad.data.size(); ++i) {
      self.inputs[0]->grad.data[i] += self.grad.data[i] * self.inputs[1]->value.data[i];
      self.inputs[1]->grad.data[i] += self.grad.data[i] * self.inputs[0]->value.data[i];
    }
  });
}

Var scale(const Var& a, double k) {
  Tensor out = a->value;
  for (double& v : out.data) v *= k;
  return make_node(std::move(out), {a}, [k](Node& self) {
    for (size_t i = 0; i < self.grad.data.size(); ++i)
      self.inputs[0]->grad.data[i] += k * self.grad.data[i];
  });
}

Var tanh(const Var& a) {
  Tensor out = a->value;
  for (double& v : out.data) v = std::tanh(v);
  return make_node(std::move(out), {a}, [](Node& self) {
    for (size_t i = 0; i < self.grad.data.size(); ++i) {
      const double y = self.value.data[i];
      self.inputs[0]->grad.data[i] += self.grad.data[i] * (1.0 - y * y);
    }
  });
}

namespace {
double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
}  // namespace

Var sigmoid(const Var& a) {
  Tensor out = a->value;
  for (double& v : out.data) v = stable_sigmoid(v);
  return make_node(std::move(out), {a}, [](Node& self) {
    for (size_t i = 0; i < self.grad.data.size(); ++i) {
      const double y = self.value.data[i];
      self.inputs[0]->grad.data[i] += self.grad.data[i] * y * (1.0 - y);
    }
  });
}

Var relu(const Var& a) {
  Tensor out = a->value;
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  return make_node(std::move(out), {a}, [](Node& self) {
    for (size_t i = 0; i < self.grad.data.size(); ++i)
      if (self.inputs[0]->value.data[i] > 0.0)
        self.inputs[0]->grad.data[i] += self.grad.data[i];
  });
}

Var concat_cols(const Var& a, const Var& b) {
  const int r = a->value.rows();
  if (b->value.rows() != r)
    throw ShapeMismatch("concat_cols: expected " + std::to_string(r) + " rows, got " +
                        b->value.shape_str());
  const int ca = a->value.cols(), cb = b->value.cols();
  Tensor out = Tensor::zeros({r, ca + cb});
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < ca; ++j) out.at(i, j) = a->value.at(i, j);
    for (int j = 0; j < cb; ++j) out.at(i, ca + j) = b->value.at(i, j);
  }
  return make_node(std::move(out), {a, b}, [r, ca, cb](Node& self) {
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < ca; ++j) self.inputs[0]->grad.at(i, j) += self.grad.at(i, j);
      for (int j = 0; j < cb; ++j) self.inputs[1]->grad.at(i, j) += self.grad.at(i, ca + j);
    }
  });
}

Var stack_rows(const std::vector<Var>& rows) {
  if (rows.empty()) throw ShapeMismatch("stack_rows: empty input");
  const int c = rows.front()->value.cols();
  int total = 0;
  for (const auto& v : rows) {
    if (v->value.cols() != c)
      throw ShapeMismatch("stack_rows: expected " + std::to_string(c) + " cols, got " +
                          v->value.shape_str());
    total += v->value.rows();
  }
  Tensor out = Tensor::zeros({total, c});
  int at = 0;
  for (const auto& v : rows) {
    std::copy(v->value.data.begin(), v->value.data.end(), out.data.begin() + at);
    at += int(v->value.data.size());
  }
  return make_node(std::move(out), rows, [](Node& self) {
    size_t at = 0;
    for (auto& in : self.inputs) {
      for (size_t i = 0; i < in->grad.data.size(); ++i) in->grad.data[i] += self.grad.data[at + i];
      at += in->grad.data.size();
    }
  });
}

Var slice(const Var& a, int r0, int rows, int c0, int cols) {
  const int r = a->value.rows(), c = a->value.cols();
  if (r0 < 0 || c0 < 0 || r0 + rows > r || c0 + cols > c)
    throw ShapeMismatch("slice: region out of bounds for " + a->value.shape_str());
  Tensor out = Tensor::zeros({rows, cols});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(i, j) = a->value.at(r0 + i, c0 + j);
  return make_node(std::move(out), {a}, [r0, c0, rows, cols](Node& self) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        self.inputs[0]->grad.at(r0 + i, c0 + j) += self.grad.at(i, j);
  });
}

Var slice_cols(const Var& a, int c0, int cols) { return slice(a, 0, a->value.rows(), c0, cols); }

Var sum(const Var& a) {
  double total = std::accumulate(a->value.data.begin(), a->value.data.end(), 0.0);
  return make_node(Tensor::scalar(total), {a}, [](Node& self) {
    const double g = self.grad.data[0];
    for (double& v : self.inputs[0]->grad.data) v += g;
  });
}

Var mean(const Var& a) {
  const double n = double(a->value.size());
  double total = std::accumulate(a->value.data.begin(), a->value.data.end(), 0.0);
  return make_node(Tensor::scalar(total / n), {a}, [n](Node& self) {
    const double g = self.grad.data[0] / n;
    for (double& v : self.inputs[0]->grad.data) v += g;
  });
}

Var squared_euclidean(const Var& a, const Var& b) {
  require_same_shape(a->value, b->value, "squared_euclidean");
  double total = 0.0;
  for (size_t i = 0; i < a->value.data.size(); ++i) {
    const double d = a->value.data[i] - b->value.data[i];
    total += d * d;
  }
  return make_node(Tensor::scalar(total), {a, b}, [](Node& self) {
    const double g = self.grad.data[0];
    for (size_t i = 0; i < self.inputs[0]->grad.data.size(); ++i) {
      const double d = self.inputs[0]->value.data[i] - self.inputs[1]->value.data[i];
      self.inputs[0]->grad.data[i] += 2.0 * g * d;
      self.inputs[1]->grad.data[i] -= 2.0 * g * d;
    }
  });
}

void backward(const Var& root) {
  if (root->value.size() != 1)
    throw ShapeMismatch("backward: root must be scalar, got " + root->value.shape_str());
  // iterative post-order DFS
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next].get();
      ++next;
      if (visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->grad.data[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_op) (*it)->backward_op(**it);
}

LstmState lstm_cell(const Var& x, const LstmState& prev, const LstmWeights& w) {
  const int hidden = prev.h->value.cols();
  Var gates = add(add(matmul(x, w.wx), matmul(prev.h, w.wh)), w.b);
  if (gates->value.cols() != 4 * hidden)
    throw ShapeMismatch("lstm_cell: expected gate width " + std::to_string(4 * hidden) + ", got " +
                        std::to_string(gates->value.cols()));
  Var i = sigmoid(slice_cols(gates, 0, hidden));
  Var f = sigmoid(slice_cols(gates, hidden, hidden));
  Var g = tanh(slice_cols(gates, 2 * hidden, hidden));
  Var o = sigmoid(slice_cols(gates, 3 * hidden, hidden));
  Var c = add(mul(f, prev.c), mul(i, g));
  Var h = mul(o, tanh(c));
  return {h, c};
}

void adam_step(Parameter& p, const Tensor& grad, double lr, double beta1, double beta2,
               double eps) {
  if (!grad.same_shape(p.value))
    throw ShapeMismatch("adam_step: gradient shape " + grad.shape_str() +
                        " does not match parameter " + p.value.shape_str());
  p.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(p.step));
  const double bc2 = 1.0 - std::pow(beta2, double(p.step));
  for (size_t i = 0; i < p.value.data.size(); ++i) {
    const double g = grad.data[i];
    p.m.data[i] = beta1 * p.m.data[i] + (1.0 - beta1) * g;
    p.v.data[i] = beta2 * p.v.data[i] + (1.0 - beta2) * g * g;
    const double mhat = p.m.data[i] / bc1;
    const double vhat = p.v.data[i] / bc2;
    p.value.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

Tensor uniform_init(int rows, int cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(double(rows));
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace maad::diffcalc
