#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "maad/common.hpp"

namespace maad::diffcalc {

// Dense 64-bit real tensor. The five baseline models only ever need rank-2
// shapes, so the 2D accessors are first-class; shape stays a general list.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor zeros(std::vector<int> shape);
  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }
  static Tensor row(std::vector<double> values);  // [1, n]

  int64_t size() const { return int64_t(data.size()); }
  int rows() const;
  int cols() const;
  double& at(int r, int c);
  double at(int r, int c) const;
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  std::string shape_str() const;
};

class Node;
using Var = std::shared_ptr<Node>;

// One vertex of the computation graph. Graphs are built per forward pass;
// backward() walks the reverse topological order once and accumulates exact
// analytic gradients into every reachable node.
class Node {
 public:
  Tensor value;
  Tensor grad;  // same shape, zero until backward
  std::vector<Var> inputs;
  std::function<void(Node&)> backward_op;  // reads this->grad, accumulates into inputs

  explicit Node(Tensor v) : value(std::move(v)) { grad = Tensor::zeros(value.shape); }
};

Var constant(Tensor value);
inline Var leaf(Tensor value) { return constant(std::move(value)); }

// ops suite
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);            // same shape
Var add_rowvec(const Var& m, const Var& row);   // [r,c] + [1,c] broadcast over rows
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);            // elementwise
Var scale(const Var& a, double k);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var concat_cols(const Var& a, const Var& b);                // same rows
Var stack_rows(const std::vector<Var>& rows);               // same cols
Var slice(const Var& a, int r0, int rows, int c0, int cols);
Var slice_cols(const Var& a, int c0, int cols);
Var sum(const Var& a);   // -> [1,1]
Var mean(const Var& a);  // -> [1,1]
Var squared_euclidean(const Var& a, const Var& b);  // sum((a-b)^2) -> [1,1]

// Seeds the (scalar) root with gradient 1 and runs the reverse sweep.
void backward(const Var& root);

struct LstmWeights {
  Var wx;  // [in, 4H], gate order i,f,g,o
  Var wh;  // [H, 4H]
  Var b;   // [1, 4H]
};

struct LstmState {
  Var h;
  Var c;
};

// Standard LSTM cell: i,f,o sigmoid, g tanh; c = f*c_prev + i*g; h = o*tanh(c).
LstmState lstm_cell(const Var& x, const LstmState& prev, const LstmWeights& w);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor m;  // Adam first moment
  Tensor v;  // Adam second moment
  int64_t step = 0;

  explicit Parameter(std::string n, Tensor val)
      : name(std::move(n)), value(std::move(val)) {
    m = Tensor::zeros(value.shape);
    v = Tensor::zeros(value.shape);
  }
};

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_step(Parameter& p, const Tensor& grad, double lr, double beta1 = kAdamBeta1,
               double beta2 = kAdamBeta2, double eps = kAdamEps);

// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weight init
Tensor uniform_init(int rows, int cols, Rng& rng);

}  // namespace maad::diffcalc
