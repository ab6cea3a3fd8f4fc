#pragma once

// Central finite-difference reference for the analytic network gradient.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hrc/net.hpp"

namespace hrc::testing {

/// 4x3x3 input, a 2x2 conv + 2x2 pool stage and a 1x1 conv stage, so every
/// layer type appears at least once.
inline NetConfig tiny_net() {
  NetConfig cfg;
  cfg.height = 4;
  cfg.width = 3;
  cfg.channels = 3;
  cfg.stages = {{4, 2, 2}, {3, 1, 1}};
  cfg.dense = 6;
  return cfg;
}

/// Random parameters with non-zero biases, so no unit sits exactly on a kink.
inline Parameters random_parameters(const NetConfig& cfg, std::uint64_t seed) {
  Parameters p = init_parameters(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> bias(0.05, 0.3);
  for (std::size_t s = 0; s < cfg.stages.size(); ++s)
    for (double& b : p.conv_bias(s).data) b = bias(rng);
  for (double& b : p.head(1).data) b = bias(rng);
  for (double& b : p.head(3).data) b = bias(rng) - 0.15;
  p.head(5).data[0] = -0.4;
  return p;
}

inline std::vector<TrainingExample> random_batch(const NetConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TrainingExample> batch;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.input = InputTensor::zeros(cfg.height, cfg.width);
    for (double& x : ex.input.data) x = unit(rng);
    ex.target_policy.resize(static_cast<std::size_t>(cfg.width));
    double sum = 0.0;
    for (double& t : ex.target_policy) sum += (t = unit(rng) + 0.05);
    for (double& t : ex.target_policy) t /= sum;
    ex.z = -3.0 * unit(rng);
    batch.push_back(std::move(ex));
  }
  return batch;
}

struct TensorCheck {
  std::string name;
  double max_relative_error = 0.0;
};

/// Per-tensor max of |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline std::vector<TensorCheck> check_gradients(const Parameters& params, const std::vector<TrainingExample>& batch,
                                                double l2, double step = 1e-5, double floor = 1e-6) {
  const Parameters analytic = gradients(params, batch, l2);
  std::vector<TensorCheck> out;
  Parameters probe = params;
  for (std::size_t t = 0; t < probe.tensors.size(); ++t) {
    TensorCheck check{probe.tensors[t].name, 0.0};
    for (std::size_t i = 0; i < probe.tensors[t].data.size(); ++i) {
      double& w = probe.tensors[t].data[i];
      const double saved = w;
      w = saved + step;
      const double up = loss(probe, batch, l2).total;
      w = saved - step;
      const double down = loss(probe, batch, l2).total;
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.tensors[t].data[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      check.max_relative_error = std::max(check.max_relative_error, std::abs(a - numeric) / denom);
    }
    out.push_back(check);
  }
  return out;
}

}  // namespace hrc::testing
