#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "maad/diffcalc.hpp"
#include "testutil.hpp"

using namespace maad;
namespace dc = maad::diffcalc;
using dc::Tensor;
using dc::Var;

TEST_CASE("tensor shape checks") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0}), ShapeMismatch);
  Tensor t = Tensor::zeros({2, 3});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.size() == 6);
}

TEST_CASE("tanh at zero has unit gradient") {
  Var x = dc::leaf(Tensor::scalar(0.0));
  Var y = dc::tanh(x);
  CHECK(y->value.data[0] == 0.0);
  dc::backward(y);
  CHECK(x->grad.data[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("squared euclidean hand value") {
  Var a = dc::leaf(Tensor::row({3.0, 4.0}));
  Var b = dc::leaf(Tensor::row({0.0, 0.0}));
  CHECK(dc::squared_euclidean(a, b)->value.data[0] == 25.0);
}

TEST_CASE("matmul identity") {
  Tensor eye = Tensor::zeros({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Tensor a({3, 2}, {1, 2, 3, 4, 5, 6});
  Var out = dc::matmul(dc::constant(eye), dc::constant(a));
  CHECK(out->value.data == a.data);
}

TEST_CASE("matmul shape mismatch lists dims") {
  Var a = dc::constant(Tensor::zeros({2, 3}));
  Var b = dc::constant(Tensor::zeros({2, 3}));
  CHECK_THROWS_AS(dc::matmul(a, b), ShapeMismatch);
  CHECK_THROWS_AS(dc::add(a, dc::constant(Tensor::zeros({3, 2}))), ShapeMismatch);
}

TEST_CASE("per-op gradients match finite differences") {
  Rng seeds(2024);
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng = seeds.derive(uint64_t(trial));
    std::vector<dc::Parameter> params;
    params.emplace_back("a", dc::uniform_init(3, 4, rng));
    params.emplace_back("b", dc::uniform_init(4, 3, rng));
    params.emplace_back("c", dc::uniform_init(3, 3, rng));
    params.emplace_back("d", dc::uniform_init(1, 3, rng));

    testutil::LossBuilder build = [](const std::vector<Var>& p) {
      const Var prod = dc::matmul(p[0], p[1]);               // [3,3]
      const Var mixed = dc::mul(dc::tanh(prod), dc::sigmoid(p[2]));
      const Var shifted = dc::add_rowvec(mixed, p[3]);
      const Var act = dc::relu(dc::concat_cols(shifted, dc::scale(p[2], 0.5)));
      const Var cut = dc::slice(act, 1, 2, 1, 3);
      return dc::add(dc::mean(cut), dc::sum(dc::squared_euclidean(
                                        dc::slice_cols(p[2], 0, 2), dc::slice_cols(p[2], 1, 2))));
    };
    Rng coord_rng = seeds.derive(uint64_t(900 + trial));
    const double err = testutil::gradcheck_max_rel_err(params, build, coord_rng);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("lstm cell zero weights zero state gives zero output") {
  const int in = 3, hidden = 4;
  dc::LstmWeights w{dc::constant(Tensor::zeros({in, 4 * hidden})),
                    dc::constant(Tensor::zeros({hidden, 4 * hidden})),
                    dc::constant(Tensor::zeros({1, 4 * hidden}))};
  dc::LstmState prev{dc::constant(Tensor::zeros({1, hidden})),
                     dc::constant(Tensor::zeros({1, hidden}))};
  const auto out = dc::lstm_cell(dc::constant(Tensor::row({1.0, -2.0, 0.5})), prev, w);
  for (const double v : out.h->value.data) CHECK(v == 0.0);
}

TEST_CASE("lstm gate semantics: saturated forget keeps the cell") {
  const int in = 2, hidden = 3;
  // bias layout i,f,g,o: drive input gate to 0 and forget gate to 1
  Tensor b = Tensor::zeros({1, 4 * hidden});
  for (int k = 0; k < hidden; ++k) {
    b.at(0, k) = -40.0;           // i -> 0
    b.at(0, hidden + k) = 40.0;   // f -> 1
  }
  dc::LstmWeights w{dc::constant(Tensor::zeros({in, 4 * hidden})),
                    dc::constant(Tensor::zeros({hidden, 4 * hidden})), dc::constant(b)};
  Tensor c_prev = Tensor::row({0.3, -0.7, 1.5});
  dc::LstmState prev{dc::constant(Tensor::zeros({1, hidden})), dc::constant(c_prev)};
  const auto out = dc::lstm_cell(dc::constant(Tensor::row({0.2, 0.9})), prev, w);
  for (int k = 0; k < hidden; ++k)
    CHECK(out.c->value.data[size_t(k)] == doctest::Approx(c_prev.data[size_t(k)]).epsilon(1e-12));
}

TEST_CASE("lstm cell gradients match finite differences") {
  Rng seeds(77);
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng = seeds.derive(uint64_t(trial));
    const int in = 3, hidden = 4;
    std::vector<dc::Parameter> params;
    params.emplace_back("wx", dc::uniform_init(in, 4 * hidden, rng));
    params.emplace_back("wh", dc::uniform_init(hidden, 4 * hidden, rng));
    params.emplace_back("b", dc::uniform_init(1, 4 * hidden, rng));
    Tensor x = dc::uniform_init(1, in, rng);
    Tensor h0 = dc::uniform_init(1, hidden, rng);
    Tensor c0 = dc::uniform_init(1, hidden, rng);

    testutil::LossBuilder build = [&](const std::vector<Var>& p) {
      dc::LstmWeights w{p[0], p[1], p[2]};
      dc::LstmState prev{dc::constant(h0), dc::constant(c0)};
      auto s1 = dc::lstm_cell(dc::constant(x), prev, w);
      auto s2 = dc::lstm_cell(dc::constant(x), s1, w);  // two chained steps
      return dc::sum(dc::mul(s2.h, s2.h));
    };
    Rng coord_rng = seeds.derive(uint64_t(500 + trial));
    CHECK(testutil::gradcheck_max_rel_err(params, build, coord_rng) < 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves fresh parameters unchanged") {
  dc::Parameter p("w", Tensor::row({1.0, -2.0, 3.0}));
  const Tensor before = p.value;
  dc::adam_step(p, Tensor::zeros({1, 3}), 1e-3);
  CHECK(p.value.data == before.data);
}

TEST_CASE("adam: first step from fresh state moves by about lr") {
  dc::Parameter p("w", Tensor::scalar(0.0));
  dc::adam_step(p, Tensor::scalar(1.0), 1e-3);
  // bias-corrected mhat = 1, vhat = 1 -> delta = -lr / (1 + eps)
  CHECK(p.value.data[0] == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam: constant gradient converges to -sign(g) * lr steps") {
  dc::Parameter p("w", Tensor::row({0.0, 0.0}));
  const Tensor g({1, 2}, {2.5, -0.4});
  double prev0 = 0.0, prev1 = 0.0;
  for (int i = 0; i < 400; ++i) {
    prev0 = p.value.data[0];
    prev1 = p.value.data[1];
    dc::adam_step(p, g, 1e-3);
  }
  CHECK(p.value.data[0] - prev0 == doctest::Approx(-1e-3).epsilon(1e-3));
  CHECK(p.value.data[1] - prev1 == doctest::Approx(1e-3).epsilon(1e-3));
}

TEST_CASE("adam trajectories are bit-identical for identical state") {
  auto run = [] {
    Rng rng(5);
    dc::Parameter p("w", dc::uniform_init(4, 4, rng));
    for (int i = 0; i < 50; ++i) {
      Tensor g = dc::uniform_init(4, 4, rng);
      dc::adam_step(p, g, 1e-3);
    }
    return p.value.data;
  };
  CHECK(run() == run());
}

TEST_CASE("backward requires a scalar root") {
  Var a = dc::leaf(Tensor::row({1.0, 2.0}));
  CHECK_THROWS_AS(dc::backward(a), ShapeMismatch);
}

TEST_CASE("reused subgraphs accumulate gradients once per path") {
  Var x = dc::leaf(Tensor::scalar(3.0));
  Var y = dc::mul(x, x);  // x^2, dy/dx = 6
  dc::backward(y);
  CHECK(x->grad.data[0] == doctest::Approx(6.0).epsilon(1e-12));
}
