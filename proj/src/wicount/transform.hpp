// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wicount/dataset.hpp"
#include "wicount/rng.hpp"

namespace wicount {

/// Dense row-major float matrix. Rows are time, columns are features.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0F) : rows(r), cols(c), data(r * c, fill) {}

  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

enum class Interpolation { bicubic, bilinear };

struct TransformConfig {
  std::size_t target_length = 3000;
  std::size_t resolution = 270;
  Interpolation interpolation = Interpolation::bicubic;
  bool warp_enabled = true;
  double warp_probability = 0.5;
  double warp_scale_min = 0.95;
  double warp_scale_max = 1.05;
  bool standardize = true;
};

void validate(const TransformConfig& cfg);

/// T x 3 x 3 x 30 amplitude to T x 270, column = 30*(3*tx + rx) + sc.
Matrix flatten_spatial(std::span<const float> amplitude, std::size_t length);

/// Resamples the time axis to round(rows * scale) rows by per-column linear
/// interpolation with end points aligned.
Matrix warp_to_scale(const Matrix& m, double scale);

/// Training-time augmentation. With probability cfg.warp_probability applies
/// warp_to_scale with a scale drawn uniformly from the configured range,
/// otherwise returns the input. Throws ContractViolation when warping is
/// disabled (eval mode).
Matrix temporal_warp(const Matrix& m, Rng& rng, const TransformConfig& cfg);

/// Truncates to the first `target_length` rows or extends by reflecting
/// about the last row (edge row not repeated).
Matrix fix_length(const Matrix& m, std::size_t target_length);

/// Antialiased separable resize of both axes to `out_rows` x `out_cols`.
Matrix resize(const Matrix& m, std::size_t out_rows, std::size_t out_cols, Interpolation kind);

/// resize() to cfg.resolution x cfg.resolution.
Matrix spatial_resize(const Matrix& m, const TransformConfig& cfg);

/// Per-sample zero mean / unit variance; near-constant input maps to zeros.
Matrix standardize(const Matrix& img);

/// The full chain flatten -> (warp) -> fix_length -> resize -> standardize.
/// Pass a generator to run in training mode (warp applied when enabled);
/// nullptr selects the deterministic eval path.
Matrix preprocess(const CsiSample& sample, const TransformConfig& cfg, Rng* train_rng = nullptr);

}  // namespace wicount
