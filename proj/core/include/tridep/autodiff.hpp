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

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tridep::nn {

// Dense row-major matrix of doubles.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}
  Mat(std::size_t r, std::size_t c, std::vector<double> values);

  double& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  std::size_t size() const { return v.size(); }
  bool operator==(const Mat&) const = default;
};

struct Parameter {
  std::string name;
  Mat value;
  Mat grad;
};

// Ordered parameter set. Value-semantic: copying snapshots the weights.
struct Params {
  std::vector<Parameter> list;

  std::size_t add(std::string name, std::size_t rows, std::size_t cols);
  std::size_t index_of(const std::string& name) const;
  void zero_grad();
  std::size_t scalar_count() const;
};

// Reverse-mode tape. Node handles are indices into the tape; parameter
// leaves accumulate into Params::grad during backward().
class Graph {
 public:
  using Var = std::size_t;

  explicit Graph(Params* params = nullptr) : params_(params) {}

  Var constant(Mat m);
  Var param(std::size_t index);

  const Mat& value(Var x) const { return nodes_[x].value; }
  const Mat& grad(Var x) const { return nodes_[x].grad; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast a 1 x c row over every row of a
  Var mul(Var a, Var b);        // elementwise
  Var one_minus(Var a);
  Var scale(Var a, double k);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);
  Var transpose(Var a);
  Var slice_rows(Var a, std::size_t r0, std::size_t n);
  Var slice_cols(Var a, std::size_t c0, std::size_t n);
  Var concat_rows(std::span<const Var> parts);
  Var concat_cols(std::span<const Var> parts);
  // Row t becomes [x(t-1), x(t), x(t+1)] with zero padding: the im2col form
  // of a kernel-3, padding-1 convolution over the row axis.
  Var shift_concat(Var a);
  // Row i*d + j becomes [x(i, j-1), x(i, j), x(i, j+1)] with zero padding:
  // im2col of a kernel-3 convolution along each row's feature axis.
  Var feature_windows(Var a);
  Var reshape(Var a, std::size_t rows, std::size_t cols);
  Var max_rows(Var a);     // column-wise max, 1 x c
  Var softmax_col(Var a);  // n x 1 -> n x 1
  Var softmax_row(Var a);  // 1 x n -> 1 x n
  // -log softmax(logits)[label] for a 1 x K logit row.
  Var cross_entropy(Var logits, std::size_t label);

  // Seeds d(out)/d(out) = 1; out must be 1 x 1.
  void backward(Var out);

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Graph&, Var)> back;
    long param = -1;
  };

  Var push(Mat value, std::function<void(Graph&, Var)> back);
  Mat& g(Var x);

  std::vector<Node> nodes_;
  Params* params_;
};

}  // namespace tridep::nn
