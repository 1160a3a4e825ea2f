// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/transform.hpp"

#include <algorithm>
#include <cmath>

#include "wicount/error.hpp"

namespace wicount {
namespace {

double bicubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

double bilinear_kernel(double x) {
  x = std::abs(x);
  return x < 1.0 ? 1.0 - x : 0.0;
}

// Contribution list for one output position.
struct Taps {
  std::size_t first = 0;
  std::vector<double> weights;
};

// Same index/weight construction as the PIL and torch antialiased resamplers
// (half-pixel centres, kernel widened by the scale factor when shrinking).
std::vector<Taps> axis_taps(std::size_t in, std::size_t out, Interpolation kind) {
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double half_width = kind == Interpolation::bicubic ? 2.0 : 1.0;
  const double support = scale >= 1.0 ? half_width * scale : half_width;
  const double inv = scale >= 1.0 ? 1.0 / scale : 1.0;
  auto kernel = kind == Interpolation::bicubic ? bicubic_kernel : bilinear_kernel;

  std::vector<Taps> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double center = scale * (static_cast<double>(i) + 0.5);
    const auto lo = std::max<std::int64_t>(static_cast<std::int64_t>(center - support + 0.5), 0);
    const auto hi = std::min<std::int64_t>(static_cast<std::int64_t>(center + support + 0.5),
                                           static_cast<std::int64_t>(in));
    Taps& t = taps[i];
    t.first = static_cast<std::size_t>(lo);
    double total = 0.0;
    for (std::int64_t j = lo; j < hi; ++j) {
      const double w = kernel((static_cast<double>(j) - center + 0.5) * inv);
      t.weights.push_back(w);
      total += w;
    }
    if (total != 0.0) {
      for (double& w : t.weights) w /= total;
    }
  }
  return taps;
}

}  // namespace

void validate(const TransformConfig& cfg) {
  if (cfg.target_length < 1) throw ConfigError("transform: target_length must be >= 1");
  if (cfg.resolution < 2) throw ConfigError("transform: resolution must be >= 2");
  if (!(cfg.warp_scale_min > 0.0) || cfg.warp_scale_max < cfg.warp_scale_min) {
    throw ConfigError("transform: warp scale range must satisfy 0 < min <= max");
  }
  if (cfg.warp_probability < 0.0 || cfg.warp_probability > 1.0) {
    throw ConfigError("transform: warp_probability must be in [0, 1]");
  }
}

Matrix flatten_spatial(std::span<const float> amplitude, std::size_t length) {
  if (length == 0 || amplitude.size() != length * kChannels) {
    throw ContractViolation("flatten_spatial: expected " + std::to_string(length) +
                            "x3x3x30 values, got " + std::to_string(amplitude.size()));
  }
  // The [t][tx][rx][sc] layout already is row-major with the subcarrier
  // fastest, so flattening is a reinterpretation of the trailing axes.
  Matrix m(length, kChannels);
  std::copy(amplitude.begin(), amplitude.end(), m.data.begin());
  return m;
}

Matrix warp_to_scale(const Matrix& m, double scale) {
  if (m.rows == 0) throw ContractViolation("warp: empty matrix");
  const auto n_out = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(m.rows) * scale)));
  if (n_out == m.rows) return m;
  Matrix out(n_out, m.cols);
  const double step = n_out > 1 ? static_cast<double>(m.rows - 1) / static_cast<double>(n_out - 1) : 0.0;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * step;
    auto lo = static_cast<std::size_t>(pos);
    if (lo >= m.rows - 1) lo = m.rows - 1;
    const std::size_t hi = std::min(lo + 1, m.rows - 1);
    const double frac = pos - static_cast<double>(lo);
    const float* a = &m.data[lo * m.cols];
    const float* b = &m.data[hi * m.cols];
    float* dst = &out.data[i * m.cols];
    for (std::size_t c = 0; c < m.cols; ++c) {
      dst[c] = static_cast<float>(a[c] + frac * (static_cast<double>(b[c]) - a[c]));
    }
  }
  return out;
}

Matrix temporal_warp(const Matrix& m, Rng& rng, const TransformConfig& cfg) {
  if (!cfg.warp_enabled) throw ContractViolation("temporal_warp called with warping disabled");
  if (!rng.bernoulli(cfg.warp_probability)) return m;
  const double s = rng.uniform(cfg.warp_scale_min, cfg.warp_scale_max);
  return warp_to_scale(m, s);
}

Matrix fix_length(const Matrix& m, std::size_t target_length) {
  if (m.rows == 0) throw ContractViolation("fix_length: input has zero rows");
  if (target_length == 0) throw ContractViolation("fix_length: target_length must be >= 1");
  Matrix out(target_length, m.cols);
  const std::size_t keep = std::min(m.rows, target_length);
  std::copy_n(m.data.begin(), keep * m.cols, out.data.begin());
  if (m.rows >= target_length) return out;
  const std::size_t period = 2 * (m.rows - 1);
  for (std::size_t j = m.rows; j < target_length; ++j) {
    std::size_t src = 0;
    if (period > 0) {
      src = j % period;
      if (src >= m.rows) src = period - src;
    }
    std::copy_n(m.data.begin() + static_cast<std::ptrdiff_t>(src * m.cols), m.cols,
                out.data.begin() + static_cast<std::ptrdiff_t>(j * m.cols));
  }
  return out;
}

Matrix resize(const Matrix& m, std::size_t out_rows, std::size_t out_cols, Interpolation kind) {
  if (m.rows == 0 || m.cols == 0 || out_rows == 0 || out_cols == 0) {
    throw ContractViolation("resize: empty input or output shape");
  }
  // Columns first (cheap: 270 -> R on every row), then rows.
  Matrix tmp(m.rows, out_cols);
  if (out_cols == m.cols) {
    tmp = m;
  } else {
    const auto taps = axis_taps(m.cols, out_cols, kind);
    for (std::size_t r = 0; r < m.rows; ++r) {
      const float* src = &m.data[r * m.cols];
      float* dst = &tmp.data[r * out_cols];
      for (std::size_t c = 0; c < out_cols; ++c) {
        const Taps& t = taps[c];
        double acc = 0.0;
        for (std::size_t j = 0; j < t.weights.size(); ++j) acc += t.weights[j] * src[t.first + j];
        dst[c] = static_cast<float>(acc);
      }
    }
  }
  if (out_rows == m.rows) return tmp;
  Matrix out(out_rows, out_cols);
  const auto taps = axis_taps(m.rows, out_rows, kind);
  std::vector<double> acc(out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const Taps& t = taps[r];
    for (std::size_t j = 0; j < t.weights.size(); ++j) {
      const double w = t.weights[j];
      const float* src = &tmp.data[(t.first + j) * out_cols];
      for (std::size_t c = 0; c < out_cols; ++c) acc[c] += w * src[c];
    }
    float* dst = &out.data[r * out_cols];
    for (std::size_t c = 0; c < out_cols; ++c) dst[c] = static_cast<float>(acc[c]);
  }
  return out;
}

Matrix spatial_resize(const Matrix& m, const TransformConfig& cfg) {
  return resize(m, cfg.resolution, cfg.resolution, cfg.interpolation);
}

Matrix standardize(const Matrix& img) {
  Matrix out(img.rows, img.cols);
  if (img.data.empty()) return out;
  double mean = 0.0;
  for (float v : img.data) mean += v;
  mean /= static_cast<double>(img.data.size());
  double var = 0.0;
  for (float v : img.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(img.data.size());
  if (var < 1e-12) return out;
  const double inv = 1.0 / std::sqrt(var);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = static_cast<float>((img.data[i] - mean) * inv);
  }
  return out;
}

Matrix preprocess(const CsiSample& sample, const TransformConfig& cfg, Rng* train_rng) {
  Matrix m = flatten_spatial(sample.amplitude, sample.length);
  if (train_rng != nullptr && cfg.warp_enabled) m = temporal_warp(m, *train_rng, cfg);
  m = fix_length(m, cfg.target_length);
  m = spatial_resize(m, cfg);
  return cfg.standardize ? standardize(m) : m;
}

}  // namespace wicount
