// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace wicount::npy {

/// Decoded contents of a NumPy .npy file. Real data lands in `real`;
/// complex data is kept as interleaved (re, im) pairs in `complex`.
struct Array {
  std::vector<std::size_t> shape;
  std::string descr;
  bool is_complex = false;
  std::vector<double> real;
  std::vector<double> complex;

  std::size_t element_count() const;
};

/// Reads little-endian f4/f8/c8/c16 arrays (C or Fortran order; the result
/// is always C order). Throws IngestionError on anything else.
Array read(const std::filesystem::path& path);

/// Element-wise magnitude for complex arrays, values unchanged for real.
std::vector<float> to_amplitude(const Array& a);

/// Writes a C-order little-endian float32 array (format version 1.0).
void write_f32(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const float> data);

/// Writes complex64 data given interleaved (re, im) pairs.
void write_c64(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const float> interleaved);

}  // namespace wicount::npy
