// Copyright 2026 The TriDep Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "tridep/autodiff.hpp"

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

namespace tridep::nn {
namespace {

Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
               double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, c);
  for (auto& x : m.v) x = u(rng);
  return m;
}

// Reduces any node to a scalar through a fixed random weighting.
Graph::Var weighted_sum(Graph& g, Graph::Var y, const Mat& w) {
  const Graph::Var prod = g.mul(y, g.constant(w));
  const Mat& v = g.value(prod);
  const Graph::Var row = g.matmul(g.constant(Mat(1, v.rows, 1.0)), prod);
  return g.matmul(row, g.constant(Mat(v.cols, 1, 1.0)));
}

using Op = std::function<Graph::Var(Graph&, Graph::Var)>;

// Max relative error between backward() and central differences on input x.
double check_op(const Op& op, Mat x, std::mt19937_64& rng) {
  Params ps;
  ps.add("x", x.rows, x.cols);
  ps.list[0].value = x;
  Graph probe(&ps);
  const auto out_shape = probe.value(op(probe, probe.param(0)));
  const Mat w = random_mat(out_shape.rows, out_shape.cols, rng);

  auto loss_at = [&](const Mat& xv) {
    Params q = ps;
    q.list[0].value = xv;
    Graph g(&q);
    return g.value(weighted_sum(g, op(g, g.param(0)), w)).v[0];
  };

  ps.zero_grad();
  Graph g(&ps);
  g.backward(weighted_sum(g, op(g, g.param(0)), w));
  double worst = 0.0;
  const double eps = 1e-5;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Mat up = x, dn = x;
    up.v[i] += eps;
    dn.v[i] -= eps;
    const double num = (loss_at(up) - loss_at(dn)) / (2 * eps);
    const double ana = ps.list[0].grad.v[i];
    worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
  }
  return worst;
}

class OpGradient : public ::testing::Test {
 protected:
  std::mt19937_64 rng{11};
};

TEST_F(OpGradient, Elementwise) {
  const Mat x = random_mat(3, 4, rng);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.sigmoid(a); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.tanh(a); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.one_minus(a); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.scale(a, -2.5); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.mul(a, a); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.add(a, a); }, x, rng), 1e-7);
  // Keep inputs away from the kink.
  Mat y = x;
  for (auto& v : y.v) v = v > 0 ? v + 0.1 : v - 0.1;
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.relu(a); }, y, rng), 1e-7);
}

TEST_F(OpGradient, MatmulAndBroadcast) {
  const Mat b = random_mat(4, 2, rng);
  const Mat r = random_mat(1, 4, rng);
  const Mat base = random_mat(3, 4, rng);
  EXPECT_LT(check_op([&](Graph& g, auto a) { return g.matmul(a, g.constant(b)); },
                     random_mat(3, 4, rng), rng),
            1e-7);
  EXPECT_LT(check_op([&](Graph& g, auto a) { return g.matmul(g.constant(r), g.transpose(a)); },
                     random_mat(3, 4, rng), rng),
            1e-7);
  EXPECT_LT(check_op([&](Graph& g, auto a) { return g.add_row(g.constant(base), a); },
                     random_mat(1, 4, rng), rng),
            1e-7);
}

TEST_F(OpGradient, Reshaping) {
  const Mat x = random_mat(4, 3, rng);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.slice_rows(a, 1, 2); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.slice_cols(a, 1, 2); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.shift_concat(a); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.feature_windows(a); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.reshape(a, 2, 6); }, x, rng), 1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.max_rows(a); }, x, rng), 1e-7);
  EXPECT_LT(check_op(
                [](Graph& g, auto a) {
                  const std::array<Graph::Var, 3> p{a, g.slice_rows(a, 0, 1), a};
                  return g.concat_rows(p);
                },
                x, rng),
            1e-7);
  EXPECT_LT(check_op(
                [](Graph& g, auto a) {
                  const std::array<Graph::Var, 2> p{a, g.tanh(a)};
                  return g.concat_cols(p);
                },
                x, rng),
            1e-7);
}

TEST_F(OpGradient, SoftmaxAndCrossEntropy) {
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.softmax_col(a); }, random_mat(5, 1, rng), rng),
            1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.softmax_row(a); }, random_mat(1, 5, rng), rng),
            1e-7);
  EXPECT_LT(check_op([](Graph& g, auto a) { return g.cross_entropy(a, 1); }, random_mat(1, 2, rng),
                     rng),
            1e-7);
}

TEST(Graph, ShiftConcatLayout) {
  Graph g;
  const auto x = g.constant(Mat(3, 1, {1, 2, 3}));
  EXPECT_EQ(g.value(g.shift_concat(x)).v, (std::vector<double>{0, 1, 2, 1, 2, 3, 2, 3, 0}));
  const auto y = g.constant(Mat(1, 3, {1, 2, 3}));
  EXPECT_EQ(g.value(g.feature_windows(y)).v, (std::vector<double>{0, 1, 2, 1, 2, 3, 2, 3, 0}));
}

TEST(Graph, CrossEntropyIsStableForLargeLogits) {
  Graph g;
  const auto z = g.constant(Mat(1, 2, {1000.0, -1000.0}));
  EXPECT_NEAR(g.value(g.cross_entropy(z, 0)).v[0], 0.0, 1e-12);
  EXPECT_NEAR(g.value(g.cross_entropy(z, 1)).v[0], 2000.0, 1e-9);
}

TEST(Graph, ShapeErrors) {
  Graph g;
  const auto a = g.constant(Mat(2, 3));
  const auto b = g.constant(Mat(2, 3));
  EXPECT_THROW(g.matmul(a, b), std::invalid_argument);
  EXPECT_THROW(g.slice_rows(a, 1, 2), std::invalid_argument);
  EXPECT_THROW(g.backward(a), std::invalid_argument);
}

}  // namespace
}  // namespace tridep::nn
