// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/npy.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include "wicount/error.hpp"

namespace wicount::npy {
namespace {

static_assert(std::endian::native == std::endian::little, "npy IO assumes a little-endian host");

constexpr char kMagic[] = "\x93NUMPY";

std::string header_value(const std::string& header, const std::string& key) {
  const std::regex re("'" + key + "'\\s*:\\s*('[^']*'|True|False|\\([^)]*\\))");
  std::smatch m;
  if (!std::regex_search(header, m, re)) {
    throw IngestionError("npy header lacks '" + key + "': " + header);
  }
  return m[1].str();
}

std::vector<std::size_t> parse_shape(const std::string& tuple) {
  std::vector<std::size_t> shape;
  std::string inner = tuple.substr(1, tuple.size() - 2);
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    shape.push_back(static_cast<std::size_t>(std::stoull(item.substr(first))));
  }
  return shape;
}

void write_header(std::ofstream& out, const std::string& descr,
                  std::span<const std::size_t> shape) {
  std::string tuple = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    tuple += std::to_string(shape[i]);
    tuple += (shape.size() == 1 || i + 1 < shape.size()) ? "," : "";
    if (i + 1 < shape.size()) tuple += " ";
  }
  tuple += ")";
  std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': " + tuple + ", }";
  const std::size_t prefix = 10;
  std::size_t total = prefix + dict.size() + 1;
  const std::size_t pad = (64 - total % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');
  out.write(kMagic, 6);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const auto len = static_cast<std::uint16_t>(dict.size());
  out.write(reinterpret_cast<const char*>(&len), 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
}

// Maps a Fortran-order linear index to its C-order position.
std::size_t fortran_to_c(std::size_t idx, const std::vector<std::size_t>& shape) {
  std::size_t c_index = 0;
  std::vector<std::size_t> coord(shape.size());
  for (std::size_t d = 0; d < shape.size(); ++d) {
    coord[d] = idx % shape[d];
    idx /= shape[d];
  }
  for (std::size_t d = 0; d < shape.size(); ++d) c_index = c_index * shape[d] + coord[d];
  return c_index;
}

}  // namespace

std::size_t Array::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open array file " + path.string());
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0) {
    throw IngestionError(path.string() + " is not a .npy file");
  }
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    std::uint16_t len16 = 0;
    in.read(reinterpret_cast<char*>(&len16), 2);
    header_len = len16;
  } else if (version[0] == 2 || version[0] == 3) {
    in.read(reinterpret_cast<char*>(&header_len), 4);
  } else {
    throw IngestionError(path.string() + ": unsupported npy version " + std::to_string(version[0]));
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw IngestionError(path.string() + ": truncated npy header");

  Array a;
  a.descr = header_value(header, "descr");
  a.descr = a.descr.substr(1, a.descr.size() - 2);
  const bool fortran = header_value(header, "fortran_order") == "True";
  a.shape = parse_shape(header_value(header, "shape"));
  const std::size_t n = a.element_count();

  auto read_block = [&](std::size_t bytes) {
    std::vector<char> buf(bytes);
    in.read(buf.data(), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes) {
      throw IngestionError(path.string() + ": truncated data (expected " + std::to_string(bytes) +
                           " bytes)");
    }
    return buf;
  };

  if (a.descr == "<f4" || a.descr == "<f8") {
    const std::size_t width = a.descr == "<f4" ? 4 : 8;
    const auto buf = read_block(n * width);
    a.real.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v;
      if (width == 4) {
        float f;
        std::memcpy(&f, buf.data() + i * 4, 4);
        v = f;
      } else {
        std::memcpy(&v, buf.data() + i * 8, 8);
      }
      a.real[fortran ? fortran_to_c(i, a.shape) : i] = v;
    }
  } else if (a.descr == "<c8" || a.descr == "<c16") {
    a.is_complex = true;
    const std::size_t width = a.descr == "<c8" ? 4 : 8;
    const auto buf = read_block(n * 2 * width);
    a.complex.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      double re, im;
      if (width == 4) {
        float f[2];
        std::memcpy(f, buf.data() + i * 8, 8);
        re = f[0];
        im = f[1];
      } else {
        std::memcpy(&re, buf.data() + i * 16, 8);
        std::memcpy(&im, buf.data() + i * 16 + 8, 8);
      }
      const std::size_t dst = fortran ? fortran_to_c(i, a.shape) : i;
      a.complex[2 * dst] = re;
      a.complex[2 * dst + 1] = im;
    }
  } else {
    throw IngestionError(path.string() + ": unsupported dtype '" + a.descr + "'");
  }
  return a;
}

std::vector<float> to_amplitude(const Array& a) {
  const std::size_t n = a.element_count();
  std::vector<float> out(n);
  if (a.is_complex) {
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = static_cast<float>(std::hypot(a.complex[2 * i], a.complex[2 * i + 1]));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(a.real[i]);
  }
  return out;
}

void write_f32(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const float> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_header(out, "<f4", shape);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size_bytes()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_c64(const std::filesystem::path& path, std::span<const std::size_t> shape,
               std::span<const float> interleaved) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_header(out, "<c8", shape);
  out.write(reinterpret_cast<const char*>(interleaved.data()),
            static_cast<std::streamsize>(interleaved.size_bytes()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace wicount::npy
