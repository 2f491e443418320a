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

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tridep::nn {

Mat::Mat(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), v(std::move(values)) {
  if (v.size() != r * c) throw std::invalid_argument("Mat: value count does not match shape");
}

std::size_t Params::add(std::string name, std::size_t rows, std::size_t cols) {
  list.push_back({std::move(name), Mat(rows, cols), Mat(rows, cols)});
  return list.size() - 1;
}

std::size_t Params::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].name == name) return i;
  }
  throw std::invalid_argument("no parameter named " + name);
}

void Params::zero_grad() {
  for (auto& p : list) std::fill(p.grad.v.begin(), p.grad.v.end(), 0.0);
}

std::size_t Params::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : list) n += p.value.size();
  return n;
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// c += a * b
void gemm_acc(const Mat& a, const Mat& b, Mat& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* crow = &c.v[i * c.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.v[i * a.cols + k];
      if (aik == 0.0) continue;
      const double* brow = &b.v[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
}

// c += a * b^T
void gemm_abt_acc(const Mat& a, const Mat& b, Mat& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.v[i * a.cols];
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.v[j * b.cols];
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      c.v[i * c.cols + j] += s;
    }
  }
}

// c += a^T * b
void gemm_atb_acc(const Mat& a, const Mat& b, Mat& c) {
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = &a.v[k * a.cols];
    const double* brow = &b.v[k * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = &c.v[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
  }
}

}  // namespace

Mat& Graph::g(Var x) {
  Node& n = nodes_[x];
  if (n.grad.v.empty() && n.value.size() > 0) n.grad = Mat(n.value.rows, n.value.cols);
  return n.grad;
}

Graph::Var Graph::push(Mat value, std::function<void(Graph&, Var)> back) {
  nodes_.push_back({std::move(value), Mat(), std::move(back), -1});
  return nodes_.size() - 1;
}

Graph::Var Graph::constant(Mat m) { return push(std::move(m), nullptr); }

Graph::Var Graph::param(std::size_t index) {
  require(params_ != nullptr && index < params_->list.size(), "Graph::param: bad index");
  const Var x = push(params_->list[index].value, nullptr);
  nodes_[x].param = static_cast<long>(index);
  return x;
}

Graph::Var Graph::matmul(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.cols == B.rows, "matmul: inner dimensions differ");
  Mat C(A.rows, B.cols);
  gemm_acc(A, B, C);
  return push(std::move(C), [a, b](Graph& G, Var self) {
    const Mat gy = G.nodes_[self].grad;
    gemm_abt_acc(gy, G.value(b), G.g(a));
    gemm_atb_acc(G.value(a), gy, G.g(b));
  });
}

Graph::Var Graph::add(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.rows == B.rows && A.cols == B.cols, "add: shape mismatch");
  Mat C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.v[i] += B.v[i];
  return push(std::move(C), [a, b](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] += gy.v[i];
    Mat& gb = G.g(b);
    for (std::size_t i = 0; i < gy.size(); ++i) gb.v[i] += gy.v[i];
  });
}

Graph::Var Graph::add_row(Var a, Var row) {
  const Mat& A = value(a);
  const Mat& R = value(row);
  require(R.rows == 1 && R.cols == A.cols, "add_row: row shape mismatch");
  Mat C = A;
  for (std::size_t i = 0; i < C.rows; ++i) {
    for (std::size_t j = 0; j < C.cols; ++j) C(i, j) += R.v[j];
  }
  return push(std::move(C), [a, row](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] += gy.v[i];
    Mat& gr = G.g(row);
    for (std::size_t i = 0; i < gy.rows; ++i) {
      for (std::size_t j = 0; j < gy.cols; ++j) gr.v[j] += gy(i, j);
    }
  });
}

Graph::Var Graph::mul(Var a, Var b) {
  const Mat& A = value(a);
  const Mat& B = value(b);
  require(A.rows == B.rows && A.cols == B.cols, "mul: shape mismatch");
  Mat C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.v[i] *= B.v[i];
  return push(std::move(C), [a, b](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    {
      const Mat& B = G.value(b);
      Mat& ga = G.g(a);
      for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] += gy.v[i] * B.v[i];
    }
    const Mat& A = G.value(a);
    Mat& gb = G.g(b);
    for (std::size_t i = 0; i < gy.size(); ++i) gb.v[i] += gy.v[i] * A.v[i];
  });
}

Graph::Var Graph::one_minus(Var a) {
  Mat C = value(a);
  for (auto& x : C.v) x = 1.0 - x;
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] -= gy.v[i];
  });
}

Graph::Var Graph::scale(Var a, double k) {
  Mat C = value(a);
  for (auto& x : C.v) x *= k;
  return push(std::move(C), [a, k](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] += k * gy.v[i];
  });
}

Graph::Var Graph::sigmoid(Var a) {
  Mat C = value(a);
  for (auto& x : C.v) x = 1.0 / (1.0 + std::exp(-x));
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& y = G.nodes_[self].value;
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] += gy.v[i] * y.v[i] * (1.0 - y.v[i]);
  });
}

Graph::Var Graph::tanh(Var a) {
  Mat C = value(a);
  for (auto& x : C.v) x = std::tanh(x);
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& y = G.nodes_[self].value;
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] += gy.v[i] * (1.0 - y.v[i] * y.v[i]);
  });
}

Graph::Var Graph::relu(Var a) {
  Mat C = value(a);
  for (auto& x : C.v) x = x > 0.0 ? x : 0.0;
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& y = G.nodes_[self].value;
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      if (y.v[i] > 0.0) ga.v[i] += gy.v[i];
    }
  });
}

Graph::Var Graph::transpose(Var a) {
  const Mat& A = value(a);
  Mat C(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) C(j, i) = A(i, j);
  }
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < ga.rows; ++i) {
      for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) += gy(j, i);
    }
  });
}

Graph::Var Graph::slice_rows(Var a, std::size_t r0, std::size_t n) {
  const Mat& A = value(a);
  require(r0 + n <= A.rows, "slice_rows: out of range");
  Mat C(n, A.cols);
  std::copy_n(A.v.begin() + static_cast<std::ptrdiff_t>(r0 * A.cols), n * A.cols, C.v.begin());
  return push(std::move(C), [a, r0](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    const std::size_t off = r0 * ga.cols;
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[off + i] += gy.v[i];
  });
}

Graph::Var Graph::slice_cols(Var a, std::size_t c0, std::size_t n) {
  const Mat& A = value(a);
  require(c0 + n <= A.cols, "slice_cols: out of range");
  Mat C(A.rows, n);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) C(i, j) = A(i, c0 + j);
  }
  return push(std::move(C), [a, c0](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.rows; ++i) {
      for (std::size_t j = 0; j < gy.cols; ++j) ga(i, c0 + j) += gy(i, j);
    }
  });
}

Graph::Var Graph::concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const std::size_t cols = value(parts[0]).cols;
  std::size_t rows = 0;
  for (Var p : parts) {
    require(value(p).cols == cols, "concat_rows: column mismatch");
    rows += value(p).rows;
  }
  Mat C(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Mat& P = value(p);
    std::copy(P.v.begin(), P.v.end(), C.v.begin() + static_cast<std::ptrdiff_t>(off));
    off += P.size();
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return push(std::move(C), [ins](Graph& G, Var self) {
    std::size_t off = 0;
    for (Var p : ins) {
      Mat& gp = G.g(p);
      const Mat& gy = G.nodes_[self].grad;
      for (std::size_t i = 0; i < gp.size(); ++i) gp.v[i] += gy.v[off + i];
      off += gp.size();
    }
  });
}

Graph::Var Graph::concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rows;
  std::size_t cols = 0;
  for (Var p : parts) {
    require(value(p).rows == rows, "concat_cols: row mismatch");
    cols += value(p).cols;
  }
  Mat C(rows, cols);
  std::size_t c0 = 0;
  for (Var p : parts) {
    const Mat& P = value(p);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < P.cols; ++j) C(i, c0 + j) = P(i, j);
    }
    c0 += P.cols;
  }
  std::vector<Var> ins(parts.begin(), parts.end());
  return push(std::move(C), [ins](Graph& G, Var self) {
    std::size_t c0 = 0;
    for (Var p : ins) {
      Mat& gp = G.g(p);
      const Mat& gy = G.nodes_[self].grad;
      for (std::size_t i = 0; i < gp.rows; ++i) {
        for (std::size_t j = 0; j < gp.cols; ++j) gp(i, j) += gy(i, c0 + j);
      }
      c0 += gp.cols;
    }
  });
}

Graph::Var Graph::shift_concat(Var a) {
  const Mat& A = value(a);
  const std::size_t n = A.rows;
  const std::size_t d = A.cols;
  Mat C(n, 3 * d);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      if (t > 0) C(t, j) = A(t - 1, j);
      C(t, d + j) = A(t, j);
      if (t + 1 < n) C(t, 2 * d + j) = A(t + 1, j);
    }
  }
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    const std::size_t n = ga.rows;
    const std::size_t d = ga.cols;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        double s = gy(t, d + j);
        if (t + 1 < n) s += gy(t + 1, j);
        if (t > 0) s += gy(t - 1, 2 * d + j);
        ga(t, j) += s;
      }
    }
  });
}

Graph::Var Graph::feature_windows(Var a) {
  const Mat& A = value(a);
  const std::size_t n = A.rows;
  const std::size_t d = A.cols;
  Mat C(n * d, 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (j > 0) C(i * d + j, 0) = A(i, j - 1);
      C(i * d + j, 1) = A(i, j);
      if (j + 1 < d) C(i * d + j, 2) = A(i, j + 1);
    }
  }
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    const std::size_t d = ga.cols;
    for (std::size_t i = 0; i < ga.rows; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        double s = gy(i * d + j, 1);
        if (j + 1 < d) s += gy(i * d + j + 1, 0);
        if (j > 0) s += gy(i * d + j - 1, 2);
        ga(i, j) += s;
      }
    }
  });
}

Graph::Var Graph::reshape(Var a, std::size_t rows, std::size_t cols) {
  require(rows * cols == value(a).size(), "reshape: element count differs");
  Mat C(rows, cols, value(a).v);
  return push(std::move(C), [a](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < gy.size(); ++i) ga.v[i] += gy.v[i];
  });
}

Graph::Var Graph::max_rows(Var a) {
  const Mat& A = value(a);
  require(A.rows > 0, "max_rows: empty input");
  Mat C(1, A.cols);
  std::vector<std::size_t> arg(A.cols, 0);
  for (std::size_t j = 0; j < A.cols; ++j) {
    double best = A(0, j);
    for (std::size_t i = 1; i < A.rows; ++i) {
      if (A(i, j) > best) {
        best = A(i, j);
        arg[j] = i;
      }
    }
    C.v[j] = best;
  }
  return push(std::move(C), [a, arg](Graph& G, Var self) {
    const Mat& gy = G.nodes_[self].grad;
    Mat& ga = G.g(a);
    for (std::size_t j = 0; j < arg.size(); ++j) ga(arg[j], j) += gy.v[j];
  });
}

namespace {

Mat softmax_values(const Mat& A) {
  Mat C = A;
  const double m = *std::max_element(C.v.begin(), C.v.end());
  double s = 0.0;
  for (auto& x : C.v) {
    x = std::exp(x - m);
    s += x;
  }
  for (auto& x : C.v) x /= s;
  return C;
}

}  // namespace

Graph::Var Graph::softmax_col(Var a) {
  const Mat& A = value(a);
  require(A.cols == 1 && A.rows > 0, "softmax_col: expects an n x 1 input");
  return push(softmax_values(A), [a](Graph& G, Var self) {
    const Mat& y = G.nodes_[self].value;
    const Mat& gy = G.nodes_[self].grad;
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += gy.v[i] * y.v[i];
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < y.size(); ++i) ga.v[i] += y.v[i] * (gy.v[i] - dot);
  });
}

Graph::Var Graph::softmax_row(Var a) {
  const Mat& A = value(a);
  require(A.rows == 1 && A.cols > 0, "softmax_row: expects a 1 x n input");
  return push(softmax_values(A), [a](Graph& G, Var self) {
    const Mat& y = G.nodes_[self].value;
    const Mat& gy = G.nodes_[self].grad;
    double dot = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) dot += gy.v[i] * y.v[i];
    Mat& ga = G.g(a);
    for (std::size_t i = 0; i < y.size(); ++i) ga.v[i] += y.v[i] * (gy.v[i] - dot);
  });
}

Graph::Var Graph::cross_entropy(Var logits, std::size_t label) {
  const Mat& Z = value(logits);
  require(Z.rows == 1 && label < Z.cols, "cross_entropy: bad logits or label");
  const double m = *std::max_element(Z.v.begin(), Z.v.end());
  double s = 0.0;
  for (double z : Z.v) s += std::exp(z - m);
  const double lse = m + std::log(s);
  Mat L(1, 1);
  L.v[0] = lse - Z.v[label];
  return push(std::move(L), [logits, label, lse](Graph& G, Var self) {
    const double gy = G.nodes_[self].grad.v[0];
    const Mat& Z = G.value(logits);
    Mat& gz = G.g(logits);
    for (std::size_t j = 0; j < Z.cols; ++j) {
      const double p = std::exp(Z.v[j] - lse);
      gz.v[j] += gy * (p - (j == label ? 1.0 : 0.0));
    }
  });
}

void Graph::backward(Var out) {
  require(value(out).rows == 1 && value(out).cols == 1, "backward: output must be scalar");
  g(out).v[0] = 1.0;
  for (Var x = out + 1; x-- > 0;) {
    Node& n = nodes_[x];
    if (n.grad.v.empty()) continue;
    if (n.back) n.back(*this, x);
    if (n.param >= 0 && params_ != nullptr) {
      Mat& pg = params_->list[static_cast<std::size_t>(n.param)].grad;
      for (std::size_t i = 0; i < pg.size(); ++i) pg.v[i] += n.grad.v[i];
    }
  }
}

}  // namespace tridep::nn
