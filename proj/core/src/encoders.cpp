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

#include "tridep/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "tridep/error.hpp"

namespace tridep::nn {

using Var = Graph::Var;

std::string_view to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::kEegCnnLstm: return "eeg_cnn_lstm";
    case EncoderKind::kEegGruAttn: return "eeg_gru_attn";
    case EncoderKind::kSpeechCnnPoolLstm: return "speech_cnn_pool_lstm";
    case EncoderKind::kTextLstm: return "text_lstm";
    case EncoderKind::kTextCnn: return "text_cnn";
  }
  return "?";
}

std::string_view to_string(PoolKind k) {
  switch (k) {
    case PoolKind::kMax: return "max";
    case PoolKind::kGruAttn: return "gru_attn";
    case PoolKind::kBiGruAttn: return "bigru_attn";
  }
  return "?";
}

std::optional<EncoderKind> parse_encoder_kind(std::string_view s) {
  for (auto k : {EncoderKind::kEegCnnLstm, EncoderKind::kEegGruAttn,
                 EncoderKind::kSpeechCnnPoolLstm, EncoderKind::kTextLstm, EncoderKind::kTextCnn}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<PoolKind> parse_pool_kind(std::string_view s) {
  for (auto k : {PoolKind::kMax, PoolKind::kGruAttn, PoolKind::kBiGruAttn}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void EncoderConfig::validate() const {
  if (input_dim == 0) throw std::invalid_argument("encoder input_dim must be positive");
  if (hidden == 0) throw std::invalid_argument("encoder hidden must be positive");
  if (layers < 1) throw std::invalid_argument("encoder layers must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be >= 0");
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------------------------------------------------------------------
// Parameter layout

namespace {

struct Declared {
  std::string name;
  std::size_t rows, cols;
  std::size_t fan_in;
};

void declare_linear(std::vector<Declared>& d, const std::string& p, std::size_t in,
                    std::size_t out) {
  d.push_back({p + ".W", in, out, in});
  d.push_back({p + ".b", 1, out, in});
}

void declare_lstm(std::vector<Declared>& d, const std::string& p, std::size_t in, std::size_t h,
                  std::size_t layers) {
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string q = p + std::to_string(l);
    const std::size_t lin = l == 0 ? in : h;
    d.push_back({q + ".W", lin, 4 * h, h});
    d.push_back({q + ".U", h, 4 * h, h});
    d.push_back({q + ".b", 1, 4 * h, h});
  }
}

void declare_gru(std::vector<Declared>& d, const std::string& p, std::size_t in, std::size_t h,
                 std::size_t layers) {
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string q = p + std::to_string(l);
    const std::size_t lin = l == 0 ? in : h;
    d.push_back({q + ".W", lin, 3 * h, h});
    d.push_back({q + ".U", h, 3 * h, h});
    d.push_back({q + ".bW", 1, 3 * h, h});
    d.push_back({q + ".bU", 1, 3 * h, h});
  }
}

void declare_attention(std::vector<Declared>& d, const std::string& p, std::size_t dim) {
  d.push_back({p + ".W", dim, dim, dim});
  d.push_back({p + ".v", dim, 1, dim});
}

std::vector<Declared> layout(const EncoderConfig& c) {
  std::vector<Declared> d;
  const std::size_t h = c.hidden;
  std::size_t latent = h;
  switch (c.kind) {
    case EncoderKind::kEegCnnLstm:
      declare_linear(d, "conv1", 3 * c.input_dim, h);
      declare_linear(d, "conv2", 3 * h, h);
      declare_lstm(d, "lstm", h, h, c.layers);
      break;
    case EncoderKind::kEegGruAttn:
      declare_gru(d, "gru", c.input_dim, h, c.layers);
      declare_attention(d, "attn", h);
      break;
    case EncoderKind::kSpeechCnnPoolLstm: {
      // Convolves along each segment's feature axis: 1 -> h channels.
      declare_linear(d, "seg_conv", 3, h);
      const std::size_t seg = c.input_dim;
      std::size_t pooled = seg;
      if (c.pool == PoolKind::kGruAttn) {
        declare_gru(d, "pool_gru", seg, h, 1);
        pooled = h;
        declare_attention(d, "pool_attn", h);
      } else if (c.pool == PoolKind::kBiGruAttn) {
        declare_gru(d, "pool_gru_fw", seg, h, 1);
        declare_gru(d, "pool_gru_bw", seg, h, 1);
        pooled = 2 * h;
        declare_attention(d, "pool_attn", pooled);
      }
      declare_lstm(d, "lstm", pooled, h, c.layers);
      break;
    }
    case EncoderKind::kTextLstm:
      declare_lstm(d, "lstm", c.input_dim, h, c.layers);
      break;
    case EncoderKind::kTextCnn:
      declare_linear(d, "conv", 3 * c.input_dim, h);
      break;
  }
  declare_linear(d, "head1", latent, h);
  declare_linear(d, "head2", h, 2);
  return d;
}

// Builds one forward pass on a graph, binding parameter leaves lazily.
class Net {
 public:
  Net(Graph& g, const Params& params, std::mt19937_64* rng, double dropout)
      : g_(g), params_(params), rng_(rng), dropout_(dropout) {}

  Var p(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const Var v = g_.param(params_.index_of(name));
    bound_.emplace(name, v);
    return v;
  }

  Var linear(Var x, const std::string& name) {
    return g_.add_row(g_.matmul(x, p(name + ".W")), p(name + ".b"));
  }

  Var conv(Var x, const std::string& name) { return g_.relu(linear(g_.shift_concat(x), name)); }

  Var dropout(Var x) {
    if (rng_ == nullptr || dropout_ <= 0.0) return x;
    const Mat& v = g_.value(x);
    Mat mask(v.rows, v.cols);
    const double keep = 1.0 - dropout_;
    for (auto& m : mask.v) m = unit_uniform(*rng_) < keep ? 1.0 / keep : 0.0;
    return g_.mul(x, g_.constant(std::move(mask)));
  }

  // Returns all hidden states (T x h) of the top layer.
  Var lstm(Var x, const std::string& prefix, std::size_t layers, std::size_t h) {
    Var in = x;
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string q = prefix + std::to_string(l);
      const Var xw = g_.add_row(g_.matmul(in, p(q + ".W")), p(q + ".b"));
      const Var U = p(q + ".U");
      const std::size_t T = g_.value(xw).rows;
      std::vector<Var> hs;
      hs.reserve(T);
      std::optional<Var> hprev, cprev;
      for (std::size_t t = 0; t < T; ++t) {
        Var gates = g_.slice_rows(xw, t, 1);
        if (hprev) gates = g_.add(gates, g_.matmul(*hprev, U));
        const Var i = g_.sigmoid(g_.slice_cols(gates, 0, h));
        const Var f = g_.sigmoid(g_.slice_cols(gates, h, h));
        const Var gg = g_.tanh(g_.slice_cols(gates, 2 * h, h));
        const Var o = g_.sigmoid(g_.slice_cols(gates, 3 * h, h));
        Var c = g_.mul(i, gg);
        if (cprev) c = g_.add(g_.mul(f, *cprev), c);
        const Var hn = g_.mul(o, g_.tanh(c));
        hs.push_back(hn);
        hprev = hn;
        cprev = c;
      }
      in = g_.concat_rows(hs);
    }
    return in;
  }

  Var gru_layer(Var in, const std::string& q, std::size_t h, bool reverse) {
    const Var xw = g_.add_row(g_.matmul(in, p(q + ".W")), p(q + ".bW"));
    const Var U = p(q + ".U");
    const Var bU = p(q + ".bU");
    const std::size_t T = g_.value(xw).rows;
    std::vector<Var> hs(T);
    std::optional<Var> hprev;
    for (std::size_t step = 0; step < T; ++step) {
      const std::size_t t = reverse ? T - 1 - step : step;
      const Var xg = g_.slice_rows(xw, t, 1);
      const Var hg = hprev ? g_.add_row(g_.matmul(*hprev, U), bU) : bU;
      const Var r = g_.sigmoid(g_.add(g_.slice_cols(xg, 0, h), g_.slice_cols(hg, 0, h)));
      const Var z = g_.sigmoid(g_.add(g_.slice_cols(xg, h, h), g_.slice_cols(hg, h, h)));
      const Var n = g_.tanh(
          g_.add(g_.slice_cols(xg, 2 * h, h), g_.mul(r, g_.slice_cols(hg, 2 * h, h))));
      Var hn = g_.mul(g_.one_minus(z), n);
      if (hprev) hn = g_.add(hn, g_.mul(z, *hprev));
      hs[t] = hn;
      hprev = hn;
    }
    return g_.concat_rows(hs);
  }

  Var gru(Var x, const std::string& prefix, std::size_t layers, std::size_t h) {
    Var in = x;
    for (std::size_t l = 0; l < layers; ++l) in = gru_layer(in, prefix + std::to_string(l), h, false);
    return in;
  }

  // Additive attention; returns (context 1 x D, weights T x 1).
  std::pair<Var, Var> attention(Var hs, const std::string& name) {
    const Var e = g_.matmul(g_.tanh(g_.matmul(hs, p(name + ".W"))), p(name + ".v"));
    const Var alpha = g_.softmax_col(e);
    return {g_.matmul(g_.transpose(alpha), hs), alpha};
  }

  // Per-row feature-axis convolution, ReLU, then the mean over output
  // channels: n x d -> n x d. Rows never interact.
  Var segment_conv(Var x, const std::string& name, std::size_t h) {
    const std::size_t n = g_.value(x).rows;
    const std::size_t d = g_.value(x).cols;
    const Var y = g_.relu(linear(g_.feature_windows(x), name));
    const Var avg = g_.matmul(y, g_.constant(Mat(h, 1, 1.0 / static_cast<double>(h))));
    return g_.reshape(avg, n, d);
  }

  Var last_row(Var x) { return g_.slice_rows(x, g_.value(x).rows - 1, 1); }

 private:
  Graph& g_;
  const Params& params_;
  std::mt19937_64* rng_;
  double dropout_;
  std::map<std::string, Var> bound_;
};

void check_sample(const EncoderConfig& c, const Sample& s) {
  if (s.x.rows == 0) throw std::invalid_argument("encoder input has no rows");
  if (s.x.cols != c.input_dim) {
    throw std::invalid_argument("encoder input width " + std::to_string(s.x.cols) +
                                " differs from input_dim " + std::to_string(c.input_dim));
  }
  if (s.label != 0 && s.label != 1) throw std::invalid_argument("label must be 0 or 1");
  if (c.kind == EncoderKind::kSpeechCnnPoolLstm && !s.groups.empty()) {
    const auto total = std::accumulate(s.groups.begin(), s.groups.end(), std::size_t{0});
    if (total != s.x.rows) throw std::invalid_argument("speech groups do not cover the rows");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

Model::Model(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  for (const auto& d : layout(cfg_)) {
    const std::size_t i = params_.add(d.name, d.rows, d.cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(d.fan_in));
    for (auto& w : params_.list[i].value.v) w = (2.0 * unit_uniform(rng) - 1.0) * bound;
  }
}

Var Model::build_loss(Graph& g, const Sample& s, std::mt19937_64* rng, Var* logits_out,
                      Var* latent_out, Var* attention_out) const {
  check_sample(cfg_, s);
  Net net(g, params_, rng, cfg_.dropout);
  const std::size_t h = cfg_.hidden;
  const Var x = g.constant(s.x);
  Var latent = 0;
  switch (cfg_.kind) {
    case EncoderKind::kEegCnnLstm: {
      Var y = net.dropout(net.conv(x, "conv1"));
      y = net.dropout(net.conv(y, "conv2"));
      latent = net.last_row(net.lstm(y, "lstm", cfg_.layers, h));
      break;
    }
    case EncoderKind::kEegGruAttn: {
      const Var hs = net.gru(x, "gru", cfg_.layers, h);
      auto [ctx, alpha] = net.attention(hs, "attn");
      latent = ctx;
      if (attention_out != nullptr) *attention_out = alpha;
      break;
    }
    case EncoderKind::kSpeechCnnPoolLstm: {
      std::vector<std::size_t> groups = s.groups;
      if (groups.empty()) groups.push_back(s.x.rows);
      std::vector<Var> recs;
      std::size_t r0 = 0;
      for (std::size_t n : groups) {
        if (n == 0) continue;
        const Var xr = g.slice_rows(x, r0, n);
        r0 += n;
        const Var y = net.dropout(net.segment_conv(xr, "seg_conv", h));
        switch (cfg_.pool) {
          case PoolKind::kMax: recs.push_back(g.max_rows(y)); break;
          case PoolKind::kGruAttn: {
            const Var hs = net.gru(y, "pool_gru", 1, h);
            recs.push_back(net.attention(hs, "pool_attn").first);
            break;
          }
          case PoolKind::kBiGruAttn: {
            const Var fw = net.gru_layer(y, "pool_gru_fw0", h, false);
            const Var bw = net.gru_layer(y, "pool_gru_bw0", h, true);
            const std::array<Var, 2> both{fw, bw};
            recs.push_back(net.attention(g.concat_cols(both), "pool_attn").first);
            break;
          }
        }
      }
      const Var seq = g.concat_rows(recs);
      latent = net.last_row(net.lstm(seq, "lstm", cfg_.layers, h));
      break;
    }
    case EncoderKind::kTextLstm:
      latent = net.last_row(net.lstm(x, "lstm", cfg_.layers, h));
      break;
    case EncoderKind::kTextCnn:
      latent = g.max_rows(net.dropout(net.conv(x, "conv")));
      break;
  }
  if (latent_out != nullptr) *latent_out = latent;
  const Var hidden = g.relu(net.linear(net.dropout(latent), "head1"));
  const Var logits = net.linear(hidden, "head2");
  if (logits_out != nullptr) *logits_out = logits;
  return g.cross_entropy(logits, static_cast<std::size_t>(s.label));
}

ForwardResult Model::forward(const Sample& s) const {
  Sample probe = s;
  probe.label = 0;
  Graph g(const_cast<Params*>(&params_));
  Var logits = 0, latent = 0;
  Var attention = static_cast<Var>(-1);
  build_loss(g, probe, nullptr, &logits, &latent, &attention);
  ForwardResult r;
  r.logits = g.value(logits);
  r.latent = g.value(latent);
  if (attention != static_cast<Var>(-1)) r.attention = g.value(attention).v;
  const double z0 = r.logits.v[0], z1 = r.logits.v[1];
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
  r.posterior.p = {e0 / (e0 + e1), e1 / (e0 + e1)};
  if (!std::isfinite(r.posterior.p[0]) || !std::isfinite(r.posterior.p[1])) {
    throw NumericError("non-finite posterior from " + std::string(to_string(cfg_.kind)));
  }
  return r;
}

double Model::loss_and_grad(const Sample& s) {
  params_.zero_grad();
  Graph g(&params_);
  const Var loss = build_loss(g, s, nullptr);
  g.backward(loss);
  return g.value(loss).v[0];
}

double cross_entropy_from_logits(const std::array<double, 2>& z, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("label must be 0 or 1");
  // -log p = log(1 + exp(z_other - z_label))
  const double d = z[label == 1 ? 0 : 1] - z[static_cast<std::size_t>(label)];
  return d > 0.0 ? d + std::log1p(std::exp(-d)) : std::log1p(std::exp(d));
}

double mean_cross_entropy(const std::vector<std::array<double, 2>>& logits,
                          const std::vector<int>& labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("mean_cross_entropy: size mismatch or empty batch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) s += cross_entropy_from_logits(logits[i], labels[i]);
  return s / static_cast<double>(logits.size());
}

// ---------------------------------------------------------------------------
// Scaling

FeatureScaler FeatureScaler::fit(const std::vector<const Mat*>& mats) {
  if (mats.empty()) throw std::invalid_argument("FeatureScaler::fit: no matrices");
  const std::size_t d = mats.front()->cols;
  FeatureScaler s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 0.0);
  std::size_t n = 0;
  for (const Mat* m : mats) {
    if (m->cols != d) throw std::invalid_argument("FeatureScaler::fit: width mismatch");
    for (std::size_t r = 0; r < m->rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) s.mean[c] += (*m)(r, c);
    }
    n += m->rows;
  }
  if (n == 0) throw std::invalid_argument("FeatureScaler::fit: no rows");
  for (auto& v : s.mean) v /= static_cast<double>(n);
  for (const Mat* m : mats) {
    for (std::size_t r = 0; r < m->rows; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        const double dv = (*m)(r, c) - s.mean[c];
        s.scale[c] += dv * dv;
      }
    }
  }
  for (auto& v : s.scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1.0;
  }
  return s;
}

Mat FeatureScaler::apply(const Mat& m) const {
  if (empty()) return m;
  if (m.cols != mean.size()) throw std::invalid_argument("FeatureScaler::apply: width mismatch");
  Mat out = m;
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = (m(r, c) - mean[c]) / scale[c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

TrainHistory train(Model& model, const TrainConfig& tcfg, const std::vector<Sample>& samples) {
  tcfg.validate();
  if (samples.size() < 2) throw DataError("training needs at least two subjects");
  bool has0 = false, has1 = false;
  for (const auto& s : samples) (s.label == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw DataError("training fold contains a single class");

  Params& params = model.params();
  std::vector<Mat> m1, m2;
  for (const auto& p : params.list) {
    m1.emplace_back(p.value.rows, p.value.cols);
    m2.emplace_back(p.value.rows, p.value.cols);
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::mt19937_64 rng(tcfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainHistory hist;
  double best = std::numeric_limits<double>::infinity();
  int stall = 0;
  long step = 0;
  for (int epoch = 0; epoch < tcfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[rng() % (i + 1)]);
    }
    double total = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(tcfg.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(tcfg.batch_size));
      params.zero_grad();
      for (std::size_t k = b0; k < b1; ++k) {
        Graph g(&params);
        const Var loss = model.build_loss(g, samples[order[k]], &rng);
        const double lv = g.value(loss).v[0];
        if (!std::isfinite(lv)) throw NumericError("non-finite training loss");
        total += lv;
        g.backward(loss);
      }
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t pi = 0; pi < params.list.size(); ++pi) {
        auto& p = params.list[pi];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
          const double grad = p.grad.v[j] * inv + tcfg.weight_decay * p.value.v[j];
          m1[pi].v[j] = kBeta1 * m1[pi].v[j] + (1.0 - kBeta1) * grad;
          m2[pi].v[j] = kBeta2 * m2[pi].v[j] + (1.0 - kBeta2) * grad * grad;
          const double mhat = m1[pi].v[j] / c1;
          const double vhat = m2[pi].v[j] / c2;
          p.value.v[j] -= tcfg.learning_rate * mhat / (std::sqrt(vhat) + kEps);
        }
      }
    }
    const double mean = total / static_cast<double>(samples.size());
    hist.epoch_loss.push_back(mean);
    if (mean < best - tcfg.min_delta) {
      best = mean;
      hist.best_epoch = epoch;
      stall = 0;
    } else if (++stall >= tcfg.patience) {
      hist.early_stopped = true;
      break;
    }
  }
  params.zero_grad();
  return hist;
}

// ---------------------------------------------------------------------------
// Gradient verification

namespace {

double eval_loss(const Model& m, const Sample& s) {
  Graph g(const_cast<Params*>(&m.params()));
  return g.value(m.build_loss(g, s, nullptr)).v[0];
}

}  // namespace

double numeric_gradient(const Model& model, const Sample& s, std::size_t param, std::size_t index,
                        double eps) {
  Model probe = model;
  double& w = probe.params().list.at(param).value.v.at(index);
  const double w0 = w;
  w = w0 + eps;
  const double up = eval_loss(probe, s);
  w = w0 - eps;
  const double down = eval_loss(probe, s);
  return (up - down) / (2.0 * eps);
}

GradCheckResult grad_check(const Model& model, const Sample& s, double eps) {
  Model work = model;
  work.loss_and_grad(s);
  GradCheckResult r;
  Model probe = model;
  for (std::size_t pi = 0; pi < work.params().list.size(); ++pi) {
    const auto& p = work.params().list[pi];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      double& w = probe.params().list[pi].value.v[j];
      const double w0 = w;
      w = w0 + eps;
      const double up = eval_loss(probe, s);
      w = w0 - eps;
      const double down = eval_loss(probe, s);
      w = w0;
      const double num = (up - down) / (2.0 * eps);
      const double ana = p.grad.v[j];
      const double rel =
          std::abs(ana - num) / std::max({std::abs(ana), std::abs(num), 1e-6});
      if (rel > r.max_rel_error) {
        r.max_rel_error = rel;
        r.worst_param = p.name + "[" + std::to_string(j) + "]";
      }
      ++r.checked;
    }
  }
  return r;
}

}  // namespace tridep::nn
