#pragma once

// Policy/value convolutional network, written out by hand in double precision.
//
//   input (channels x height x width, one channel per stone kind)
//   -> [conv kxk stride 1 + ReLU -> max-pool p x p]  per stage
//   -> flatten -> dense + ReLU
//   -> policy head (width logits, softmax) and value head (one linear unit)
//
// Pooling uses non-overlapping windows and drops trailing rows/columns. The
// default stages turn a 15x8 board into 14x7 -> 7x3 -> 6x2 -> 3x1, so the
// flattened feature vector has 10 * 3 * 1 = 30 entries.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hrc/error.hpp"
#include "hrc/game.hpp"

namespace hrc {

struct ConvStage {
  int filters = 10;
  int kernel = 2;
  int pool = 2;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

struct FeatureShape {
  int channels;
  int height;
  int width;

  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }

  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

struct NetConfig {
  int height = 15;
  int width = 8;
  int channels = 3;
  std::vector<ConvStage> stages{{10, 2, 2}, {10, 2, 2}};
  int dense = 128;

  FeatureShape input_shape() const { return {channels, height, width}; }

  /// Shape after each stage's convolution (index 2i) and pooling (2i+1).
  std::vector<FeatureShape> feature_shapes() const {
    std::vector<FeatureShape> out;
    FeatureShape s = input_shape();
    for (const ConvStage& st : stages) {
      s = {st.filters, s.height - st.kernel + 1, s.width - st.kernel + 1};
      out.push_back(s);
      s = {st.filters, st.pool > 0 ? s.height / st.pool : 0, st.pool > 0 ? s.width / st.pool : 0};
      out.push_back(s);
    }
    return out;
  }

  std::size_t flatten_size() const {
    auto shapes = feature_shapes();
    return shapes.empty() ? input_shape().size() : shapes.back().size();
  }

  void validate() const {
    if (height < 1 || width < 1 || channels < 1 || dense < 1) throw ShapeError("network dimensions must be positive");
    for (const ConvStage& st : stages) {
      if (st.filters < 1 || st.kernel < 1 || st.pool < 1) throw ShapeError("stage parameters must be positive");
    }
    for (const FeatureShape& s : feature_shapes()) {
      if (s.height < 1 || s.width < 1) {
        throw ShapeError("input " + std::to_string(height) + "x" + std::to_string(width) +
                         " is too small for the configured stages");
      }
    }
  }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static Tensor zeros(std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return {std::move(name), std::move(shape), std::vector<double>(n, 0.0)};
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Network parameters: for every stage a weight [F][C][k][k] and bias [F],
/// then dense [D][flat] + [D], policy [width][D] + [width], value [1][D] + [1].
/// Gradients and momentum buffers use the same type.
struct Parameters {
  NetConfig config;
  std::vector<Tensor> tensors;

  static Parameters zeros(const NetConfig& config) {
    config.validate();
    Parameters p{config, {}};
    const auto D = static_cast<std::size_t>(config.dense);
    std::size_t in_ch = static_cast<std::size_t>(config.channels);
    for (std::size_t i = 0; i < config.stages.size(); ++i) {
      const auto& st = config.stages[i];
      const auto F = static_cast<std::size_t>(st.filters), k = static_cast<std::size_t>(st.kernel);
      const std::string prefix = "conv" + std::to_string(i + 1);
      p.tensors.push_back(Tensor::zeros(prefix + ".weight", {F, in_ch, k, k}));
      p.tensors.push_back(Tensor::zeros(prefix + ".bias", {F}));
      in_ch = F;
    }
    const auto W = static_cast<std::size_t>(config.width);
    p.tensors.push_back(Tensor::zeros("dense.weight", {D, config.flatten_size()}));
    p.tensors.push_back(Tensor::zeros("dense.bias", {D}));
    p.tensors.push_back(Tensor::zeros("policy.weight", {W, D}));
    p.tensors.push_back(Tensor::zeros("policy.bias", {W}));
    p.tensors.push_back(Tensor::zeros("value.weight", {1, D}));
    p.tensors.push_back(Tensor::zeros("value.bias", {1}));
    return p;
  }

  std::size_t stage_count() const { return config.stages.size(); }
  Tensor& conv_weight(std::size_t s) { return tensors[2 * s]; }
  Tensor& conv_bias(std::size_t s) { return tensors[2 * s + 1]; }
  const Tensor& conv_weight(std::size_t s) const { return tensors[2 * s]; }
  const Tensor& conv_bias(std::size_t s) const { return tensors[2 * s + 1]; }
  Tensor& head(std::size_t k) { return tensors[2 * stage_count() + k]; }
  const Tensor& head(std::size_t k) const { return tensors[2 * stage_count() + k]; }
  // head(0..5): dense.weight, dense.bias, policy.weight, policy.bias, value.weight, value.bias

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.data.size();
    return n;
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& t : tensors) {
      for (double v : t.data) s += v * v;
    }
    return s;
  }

  bool same_shape(const Parameters& other) const {
    if (!(config == other.config) || tensors.size() != other.tensors.size()) return false;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      if (tensors[i].shape != other.tensors[i].shape) return false;
    }
    return true;
  }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Glorot-uniform weights, zero biases.
inline Parameters init_parameters(const NetConfig& config, std::uint64_t seed) {
  Parameters p = Parameters::zeros(config);
  std::mt19937_64 rng(seed);
  auto fill = [&](Tensor& t, double fan_in, double fan_out) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-s, s);
    for (double& v : t.data) v = dist(rng);
  };
  int in_ch = config.channels;
  for (std::size_t i = 0; i < config.stages.size(); ++i) {
    const auto& st = config.stages[i];
    const double kk = static_cast<double>(st.kernel) * st.kernel;
    fill(p.conv_weight(i), in_ch * kk, st.filters * kk);
    in_ch = st.filters;
  }
  fill(p.head(0), static_cast<double>(config.flatten_size()), config.dense);
  fill(p.head(2), config.dense, config.width);
  fill(p.head(4), config.dense, 1.0);
  return p;
}

// ---------------------------------------------------------------------------
// Input encoding

/// Stone occupancy by kind, stored channel-major. Row 0 is the bottom row.
struct InputTensor {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // [3][height][width]

  static InputTensor zeros(int height, int width) {
    return {height, width, std::vector<double>(static_cast<std::size_t>(3) * height * width, 0.0)};
  }

  double& at(int row, int col, int channel) {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }
  double at(int row, int col, int channel) const {
    return data[(static_cast<std::size_t>(channel) * height + row) * width + col];
  }

  friend bool operator==(const InputTensor&, const InputTensor&) = default;
};

inline int kind_channel(TaskKind kind) {
  switch (kind) {
    case TaskKind::HumanOnly: return 0;
    case TaskKind::RobotOnly: return 1;
    case TaskKind::Either: return 2;
  }
  return 0;
}

/// Boards smaller than the input are zero-padded above and to the right.
inline InputTensor encode_state(const GameState& state, int height, int width) {
  const Board& board = state.board();
  if (board.height() > height || board.width() > width) {
    throw ShapeError("board " + std::to_string(board.width()) + "x" + std::to_string(board.height()) +
                     " exceeds network input " + std::to_string(width) + "x" + std::to_string(height));
  }
  InputTensor x = InputTensor::zeros(height, width);
  for (int r = 0; r < board.height(); ++r) {
    for (int c = 0; c < board.width(); ++c) {
      if (auto t = board.cell(c, r)) x.at(r, c, kind_channel(state.spec().tasks[*t].kind)) = 1.0;
    }
  }
  return x;
}

inline InputTensor encode_state(const GameState& state, const NetConfig& config) {
  return encode_state(state, config.height, config.width);
}

// ---------------------------------------------------------------------------
// Forward / backward

struct PolicyValue {
  std::vector<double> p;  // one entry per board column
  double v = 0.0;         // estimated minus remaining completion time, <= 0
};

/// Intermediate values of one forward pass, kept for backpropagation.
struct ForwardTrace {
  std::vector<std::vector<double>> conv;          // post-ReLU, per stage
  std::vector<std::vector<double>> pooled;        // per stage
  std::vector<std::vector<std::size_t>> argmax;   // pooled index -> conv index
  std::vector<double> hidden;                     // dense, post-ReLU
  std::vector<double> logits;
  std::vector<double> p;
  double v_raw = 0.0;
};

namespace detail {

inline void conv_relu(std::span<const double> in, FeatureShape is, const Tensor& w, const Tensor& b, int k,
                      std::vector<double>& out, FeatureShape os) {
  out.assign(os.size(), 0.0);
  for (int f = 0; f < os.channels; ++f) {
    for (int y = 0; y < os.height; ++y) {
      for (int x = 0; x < os.width; ++x) {
        double acc = b.data[f];
        for (int c = 0; c < is.channels; ++c) {
          const double* wk = &w.data[((static_cast<std::size_t>(f) * is.channels + c) * k) * k];
          const double* ic = &in[static_cast<std::size_t>(c) * is.height * is.width];
          for (int dy = 0; dy < k; ++dy) {
            for (int dx = 0; dx < k; ++dx) acc += wk[dy * k + dx] * ic[(y + dy) * is.width + (x + dx)];
          }
        }
        out[(static_cast<std::size_t>(f) * os.height + y) * os.width + x] = acc > 0.0 ? acc : 0.0;
      }
    }
  }
}

inline void max_pool(const std::vector<double>& in, FeatureShape is, int p, std::vector<double>& out,
                     std::vector<std::size_t>& arg, FeatureShape os) {
  out.assign(os.size(), 0.0);
  arg.assign(os.size(), 0);
  for (int c = 0; c < os.channels; ++c) {
    for (int y = 0; y < os.height; ++y) {
      for (int x = 0; x < os.width; ++x) {
        std::size_t best = (static_cast<std::size_t>(c) * is.height + y * p) * is.width + x * p;
        for (int dy = 0; dy < p; ++dy) {
          for (int dx = 0; dx < p; ++dx) {
            std::size_t idx = (static_cast<std::size_t>(c) * is.height + y * p + dy) * is.width + x * p + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        std::size_t o = (static_cast<std::size_t>(c) * os.height + y) * os.width + x;
        out[o] = in[best];
        arg[o] = best;
      }
    }
  }
}

inline void softmax(const std::vector<double>& logits, std::vector<double>& p) {
  const double m = *std::max_element(logits.begin(), logits.end());
  p.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= sum;
}

}  // namespace detail

inline ForwardTrace forward_trace(const Parameters& params, const InputTensor& x) {
  const NetConfig& cfg = params.config;
  if (x.height != cfg.height || x.width != cfg.width ||
      x.data.size() != cfg.input_shape().size()) {
    throw ShapeError("input tensor does not match network input shape");
  }
  ForwardTrace t;
  const auto shapes = cfg.feature_shapes();
  std::span<const double> cur = x.data;
  FeatureShape cur_shape = cfg.input_shape();
  t.conv.resize(cfg.stages.size());
  t.pooled.resize(cfg.stages.size());
  t.argmax.resize(cfg.stages.size());
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    detail::conv_relu(cur, cur_shape, params.conv_weight(s), params.conv_bias(s), cfg.stages[s].kernel, t.conv[s],
                      shapes[2 * s]);
    detail::max_pool(t.conv[s], shapes[2 * s], cfg.stages[s].pool, t.pooled[s], t.argmax[s], shapes[2 * s + 1]);
    cur = t.pooled[s];
    cur_shape = shapes[2 * s + 1];
  }

  const Tensor& dw = params.head(0);
  const Tensor& db = params.head(1);
  const std::size_t D = dw.shape[0], n_in = dw.shape[1];
  t.hidden.assign(D, 0.0);
  for (std::size_t i = 0; i < D; ++i) {
    double acc = db.data[i];
    const double* row = &dw.data[i * n_in];
    for (std::size_t j = 0; j < n_in; ++j) acc += row[j] * cur[j];
    t.hidden[i] = acc > 0.0 ? acc : 0.0;
  }

  const Tensor& pw = params.head(2);
  const Tensor& pb = params.head(3);
  const std::size_t W = pw.shape[0];
  t.logits.assign(W, 0.0);
  for (std::size_t a = 0; a < W; ++a) {
    double acc = pb.data[a];
    for (std::size_t i = 0; i < D; ++i) acc += pw.data[a * D + i] * t.hidden[i];
    t.logits[a] = acc;
  }
  detail::softmax(t.logits, t.p);

  const Tensor& vw = params.head(4);
  double v = params.head(5).data[0];
  for (std::size_t i = 0; i < D; ++i) v += vw.data[i] * t.hidden[i];
  t.v_raw = v;
  return t;
}

/// Network output. The value is clamped to be non-positive.
inline PolicyValue forward(const Parameters& params, const InputTensor& x) {
  ForwardTrace t = forward_trace(params, x);
  return {std::move(t.p), std::min(t.v_raw, 0.0)};
}

// ---------------------------------------------------------------------------
// Loss and gradients

struct TrainingExample {
  InputTensor input;
  std::vector<double> target_policy;  // per column, sums to 1
  double z = 0.0;                     // minus the remaining completion time
};

struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;  // mean cross-entropy
  double value = 0.0;   // mean squared error
  double l2 = 0.0;      // l2 * |theta|^2
};

/// (z - v)^2 and -sum pi log p for one example. `logits` give log p stably.
inline std::pair<double, double> example_loss(const std::vector<double>& logits, double v,
                                              const std::vector<double>& target_policy, double z) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - m);
  const double lse = m + std::log(sum);
  double ce = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    if (target_policy[a] != 0.0) ce -= target_policy[a] * (logits[a] - lse);
  }
  return {ce, (z - v) * (z - v)};
}

namespace detail {

inline void check_batch(const Parameters& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw ShapeError("empty training batch");
  for (const auto& ex : batch) {
    if (ex.target_policy.size() != static_cast<std::size_t>(params.config.width)) {
      throw ShapeError("target policy length does not match the policy head");
    }
  }
}

}  // namespace detail

inline LossBreakdown loss(const Parameters& params, std::span<const TrainingExample> batch, double l2) {
  detail::check_batch(params, batch);
  LossBreakdown out;
  for (const auto& ex : batch) {
    ForwardTrace t = forward_trace(params, ex.input);
    auto [ce, se] = example_loss(t.logits, t.v_raw, ex.target_policy, ex.z);
    out.policy += ce;
    out.value += se;
  }
  const double n = static_cast<double>(batch.size());
  out.policy /= n;
  out.value /= n;
  out.l2 = l2 * params.squared_norm();
  out.total = out.policy + out.value + out.l2;
  return out;
}

/// Exact gradient of `loss` by backpropagation. The value term is taken on
/// the unclamped head output.
inline Parameters gradients(const Parameters& params, std::span<const TrainingExample> batch, double l2,
                            LossBreakdown* breakdown = nullptr) {
  detail::check_batch(params, batch);
  const NetConfig& cfg = params.config;
  const auto shapes = cfg.feature_shapes();
  const std::size_t S = cfg.stages.size();
  Parameters g = Parameters::zeros(cfg);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  LossBreakdown lb;

  for (const auto& ex : batch) {
    ForwardTrace t = forward_trace(params, ex.input);
    auto [ce, se] = example_loss(t.logits, t.v_raw, ex.target_policy, ex.z);
    lb.policy += ce;
    lb.value += se;

    double pi_mass = 0.0;
    for (double v : ex.target_policy) pi_mass += v;
    const std::size_t W = t.logits.size();
    const std::size_t D = t.hidden.size();
    std::vector<double> dlogits(W);
    for (std::size_t a = 0; a < W; ++a) dlogits[a] = (t.p[a] * pi_mass - ex.target_policy[a]) * inv_n;
    const double dv = 2.0 * (t.v_raw - ex.z) * inv_n;

    std::vector<double> dhidden(D, 0.0);
    const Tensor& pw = params.head(2);
    for (std::size_t a = 0; a < W; ++a) {
      g.head(3).data[a] += dlogits[a];
      for (std::size_t i = 0; i < D; ++i) {
        g.head(2).data[a * D + i] += dlogits[a] * t.hidden[i];
        dhidden[i] += dlogits[a] * pw.data[a * D + i];
      }
    }
    const Tensor& vw = params.head(4);
    g.head(5).data[0] += dv;
    for (std::size_t i = 0; i < D; ++i) {
      g.head(4).data[i] += dv * t.hidden[i];
      dhidden[i] += dv * vw.data[i];
    }

    const std::vector<double>& flat = S > 0 ? t.pooled[S - 1] : ex.input.data;
    const std::size_t n_in = flat.size();
    std::vector<double> dflat(n_in, 0.0);
    const Tensor& dw = params.head(0);
    for (std::size_t i = 0; i < D; ++i) {
      if (t.hidden[i] <= 0.0) continue;
      const double d = dhidden[i];
      g.head(1).data[i] += d;
      for (std::size_t j = 0; j < n_in; ++j) {
        g.head(0).data[i * n_in + j] += d * flat[j];
        dflat[j] += d * dw.data[i * n_in + j];
      }
    }

    std::vector<double> dpooled = std::move(dflat);
    for (std::size_t s = S; s-- > 0;) {
      const FeatureShape cs = shapes[2 * s];
      std::vector<double> dconv(cs.size(), 0.0);
      for (std::size_t o = 0; o < dpooled.size(); ++o) dconv[t.argmax[s][o]] += dpooled[o];
      for (std::size_t i = 0; i < dconv.size(); ++i) {
        if (t.conv[s][i] <= 0.0) dconv[i] = 0.0;
      }

      const FeatureShape is = s == 0 ? cfg.input_shape() : shapes[2 * s - 1];
      const std::vector<double>& in = s == 0 ? ex.input.data : t.pooled[s - 1];
      const int k = cfg.stages[s].kernel;
      const Tensor& w = params.conv_weight(s);
      Tensor& gw = g.conv_weight(s);
      Tensor& gb = g.conv_bias(s);
      std::vector<double> din(s == 0 ? 0 : is.size(), 0.0);
      for (int f = 0; f < cs.channels; ++f) {
        for (int y = 0; y < cs.height; ++y) {
          for (int x = 0; x < cs.width; ++x) {
            const double d = dconv[(static_cast<std::size_t>(f) * cs.height + y) * cs.width + x];
            if (d == 0.0) continue;
            gb.data[f] += d;
            for (int c = 0; c < is.channels; ++c) {
              const std::size_t wbase = ((static_cast<std::size_t>(f) * is.channels + c) * k) * k;
              const std::size_t ibase = static_cast<std::size_t>(c) * is.height * is.width;
              for (int dy = 0; dy < k; ++dy) {
                for (int dx = 0; dx < k; ++dx) {
                  const std::size_t ii = ibase + (y + dy) * is.width + (x + dx);
                  gw.data[wbase + dy * k + dx] += d * in[ii];
                  if (s > 0) din[ii] += d * w.data[wbase + dy * k + dx];
                }
              }
            }
          }
        }
      }
      dpooled = std::move(din);
    }
  }

  for (std::size_t i = 0; i < g.tensors.size(); ++i) {
    for (std::size_t j = 0; j < g.tensors[i].data.size(); ++j) {
      g.tensors[i].data[j] += 2.0 * l2 * params.tensors[i].data[j];
    }
  }
  if (breakdown) {
    lb.policy *= inv_n;
    lb.value *= inv_n;
    lb.l2 = l2 * params.squared_norm();
    lb.total = lb.policy + lb.value + lb.l2;
    *breakdown = lb;
  }
  return g;
}

/// Rescales `grad` so its global L2 norm is at most `max_norm` (0 disables).
/// Returns the norm before rescaling.
inline double clip_gradient(Parameters& grad, double max_norm) {
  const double norm = std::sqrt(grad.squared_norm());
  if (max_norm > 0.0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& t : grad.tensors)
      for (double& x : t.data) x *= k;
  }
  return norm;
}

/// Classic momentum: velocity = momentum * velocity - lr * grad; theta += velocity.
inline Parameters sgd_step(const Parameters& params, const Parameters& grad, double lr, double momentum,
                           Parameters& velocity) {
  if (!params.same_shape(grad) || !params.same_shape(velocity)) throw ShapeError("gradient shape mismatch");
  Parameters next = params;
  for (std::size_t i = 0; i < next.tensors.size(); ++i) {
    auto& th = next.tensors[i].data;
    auto& ve = velocity.tensors[i].data;
    const auto& gr = grad.tensors[i].data;
    for (std::size_t j = 0; j < th.size(); ++j) {
      ve[j] = momentum * ve[j] - lr * gr[j];
      th[j] += ve[j];
    }
  }
  return next;
}

// ---------------------------------------------------------------------------
// Evaluators used by the tree search

class NetworkEvaluator {
 public:
  explicit NetworkEvaluator(const Parameters& params) : params_(&params) {}

  PolicyValue evaluate(const GameState& state) const {
    return forward(*params_, encode_state(state, params_->config));
  }

  int policy_width() const { return params_->config.width; }

 private:
  const Parameters* params_;
};

// ---------------------------------------------------------------------------
// Checkpoints
//
//   HRCNET v1
//   tensor <name> <dim0> <dim1> ...
//   <row-major values, 17 significant digits>
//   ...
//   end
//
// The first tensor, `architecture`, records the NetConfig as
// [height, width, channels, dense, stages, (filters, kernel, pool) per stage].

inline constexpr const char* kCheckpointMagic = "HRCNET v1";

inline void save_checkpoint(const Parameters& params, std::ostream& out) {
  const NetConfig& c = params.config;
  std::vector<double> arch{double(c.height), double(c.width), double(c.channels), double(c.dense),
                           double(c.stages.size())};
  for (const auto& s : c.stages) {
    arch.insert(arch.end(), {double(s.filters), double(s.kernel), double(s.pool)});
  }
  auto write_tensor = [&out](const std::string& name, const std::vector<std::size_t>& shape,
                             const std::vector<double>& data) {
    out << "tensor " << name;
    for (auto d : shape) out << ' ' << d;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", data[i]);
      out << buf << ((i + 1) % 8 == 0 || i + 1 == data.size() ? '\n' : ' ');
    }
  };
  out << kCheckpointMagic << '\n';
  write_tensor("architecture", {arch.size()}, arch);
  for (const auto& t : params.tensors) write_tensor(t.name, t.shape, t.data);
  out << "end\n";
}

inline void save_checkpoint(const Parameters& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot write checkpoint " + path);
  save_checkpoint(params, out);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "failed writing checkpoint " + path);
}

inline Parameters load_checkpoint(std::istream& in) {
  using K = CheckpointError::Kind;
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError(K::CorruptPayload, "empty checkpoint");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCheckpointMagic) throw CheckpointError(K::VersionMismatch, "expected header 'HRCNET v1'");

  std::string token;
  auto next = [&](const char* what) {
    if (!(in >> token)) throw CheckpointError(K::CorruptPayload, std::string("truncated checkpoint: missing ") + what);
    return token;
  };
  auto to_size = [&](const std::string& s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw CheckpointError(K::CorruptPayload, "bad dimension '" + s + "'");
    return v;
  };
  auto read_tensor = [&](Tensor& t) {
    // `tensor` keyword already consumed
    t.name = next("tensor name");
    t.shape.clear();
    std::size_t count = 1;
    // dimensions run until the end of the line
    std::getline(in, line);
    std::istringstream dims(line);
    std::string d;
    while (dims >> d) {
      t.shape.push_back(to_size(d));
      count *= t.shape.back();
    }
    if (t.shape.empty()) throw CheckpointError(K::CorruptPayload, "tensor " + t.name + " has no dimensions");
    t.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::string& s = next("tensor values");
      double v = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || p != s.data() + s.size()) {
        throw CheckpointError(K::CorruptPayload, "bad value '" + s + "' in tensor " + t.name);
      }
      t.data[i] = v;
    }
  };

  if (next("architecture") != "tensor") throw CheckpointError(K::CorruptPayload, "expected 'tensor'");
  Tensor arch;
  read_tensor(arch);
  if (arch.name != "architecture" || arch.data.size() < 5) {
    throw CheckpointError(K::CorruptPayload, "missing architecture tensor");
  }
  auto as_int = [&](double v) {
    if (v != std::floor(v) || v < 0 || v > 1e6) throw CheckpointError(K::CorruptPayload, "bad architecture value");
    return static_cast<int>(v);
  };
  NetConfig cfg;
  cfg.height = as_int(arch.data[0]);
  cfg.width = as_int(arch.data[1]);
  cfg.channels = as_int(arch.data[2]);
  cfg.dense = as_int(arch.data[3]);
  const auto n_stages = static_cast<std::size_t>(as_int(arch.data[4]));
  if (arch.data.size() != 5 + 3 * n_stages) throw CheckpointError(K::CorruptPayload, "bad architecture length");
  cfg.stages.clear();
  for (std::size_t s = 0; s < n_stages; ++s) {
    cfg.stages.push_back({as_int(arch.data[5 + 3 * s]), as_int(arch.data[6 + 3 * s]), as_int(arch.data[7 + 3 * s])});
  }

  Parameters expected;
  try {
    expected = Parameters::zeros(cfg);
  } catch (const ShapeError& e) {
    throw CheckpointError(K::ShapeMismatch, e.what());
  }
  Parameters params{cfg, {}};
  for (const Tensor& want : expected.tensors) {
    if (next("tensor") != "tensor") throw CheckpointError(K::CorruptPayload, "expected 'tensor' before " + want.name);
    Tensor t;
    read_tensor(t);
    if (t.name != want.name || t.shape != want.shape) {
      throw CheckpointError(K::ShapeMismatch, "tensor " + t.name + " does not match expected " + want.name);
    }
    params.tensors.push_back(std::move(t));
  }
  if (next("end marker") != "end") throw CheckpointError(K::CorruptPayload, "expected 'end'");
  return params;
}

inline Parameters load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot read checkpoint " + path);
  return load_checkpoint(in);
}

}  // namespace hrc
