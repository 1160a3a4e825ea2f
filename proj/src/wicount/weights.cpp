// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#include "wicount/weights.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "wicount/error.hpp"
#include "wicount/rng.hpp"

namespace wicount {
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

TensorFile read_safetensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open weight file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  TensorFile out;
  out.digest = hex64(fnv1a(bytes));
  auto fail = [&](const std::string& why) {
    throw CheckpointError("weight file " + path.string() + " (fnv1a " + out.digest + "): " + why);
  };
  if (bytes.size() < 8) fail("truncated header");
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), 8);
  if (header_len > bytes.size() - 8) fail("header length exceeds file size");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_len));
  } catch (const std::exception& e) {
    fail(std::string("bad header json: ") + e.what());
  }
  const std::size_t data_start = 8 + header_len;
  for (const auto& [name, info] : header.items()) {
    if (name == "__metadata__") continue;
    const std::string dtype = info.at("dtype");
    std::vector<std::int64_t> shape = info.at("shape").get<std::vector<std::int64_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::size_t>>();
    if (offsets.size() != 2 || offsets[1] < offsets[0] || data_start + offsets[1] > bytes.size()) {
      fail("bad data offsets for '" + name + "'");
    }
    torch::Dtype t;
    std::size_t width;
    if (dtype == "F32") t = torch::kFloat32, width = 4;
    else if (dtype == "F64") t = torch::kFloat64, width = 8;
    else if (dtype == "I64") t = torch::kInt64, width = 8;
    else fail("unsupported dtype " + dtype + " for '" + name + "'");
    std::int64_t numel = 1;
    for (auto d : shape) numel *= d;
    if (static_cast<std::size_t>(numel) * width != offsets[1] - offsets[0]) {
      fail("size mismatch for '" + name + "'");
    }
    auto tensor = torch::empty(shape, torch::TensorOptions().dtype(t));
    std::memcpy(tensor.data_ptr(), bytes.data() + data_start + offsets[0], offsets[1] - offsets[0]);
    out.tensors.emplace(name, std::move(tensor));
  }
  return out;
}

void write_safetensors(const std::filesystem::path& path,
                       const std::map<std::string, torch::Tensor>& tensors) {
  nlohmann::json header = nlohmann::json::object();
  std::size_t offset = 0;
  std::vector<torch::Tensor> ordered;
  for (const auto& [name, t] : tensors) {
    auto c = t.detach().contiguous().cpu();
    std::string dtype;
    if (c.scalar_type() == torch::kFloat32) dtype = "F32";
    else if (c.scalar_type() == torch::kFloat64) dtype = "F64";
    else if (c.scalar_type() == torch::kInt64) dtype = "I64";
    else throw CheckpointError("write_safetensors: unsupported dtype for '" + name + "'");
    const std::size_t n = c.numel() * c.element_size();
    header[name] = {{"dtype", dtype}, {"shape", c.sizes().vec()}, {"data_offsets", {offset, offset + n}}};
    offset += n;
    ordered.push_back(c);
  }
  std::string h = header.dump();
  h.append((8 - h.size() % 8) % 8, ' ');
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::uint64_t len = h.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& c : ordered) {
    out.write(static_cast<const char*>(c.data_ptr()), static_cast<std::streamsize>(c.numel() * c.element_size()));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

void load_named_tensors(torch::nn::Module& module, const std::filesystem::path& path) {
  const TensorFile file = read_safetensors(path);
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& name, torch::Tensor& dst) {
    auto it = file.tensors.find(name);
    if (it == file.tensors.end()) {
      throw CheckpointError("weight file " + path.string() + " (fnv1a " + file.digest +
                            ") lacks tensor '" + name + "'");
    }
    if (it->second.sizes() != dst.sizes()) {
      throw CheckpointError("weight file " + path.string() + " (fnv1a " + file.digest +
                            "): shape mismatch for '" + name + "'");
    }
    dst.copy_(it->second.to(dst.scalar_type()));
  };
  for (auto& p : module.named_parameters()) assign(p.key(), p.value());
  for (auto& b : module.named_buffers()) {
    // BatchNorm's step counter is bookkeeping; exporters may leave it out.
    if (b.key().ends_with("num_batches_tracked") && !file.tensors.count(b.key())) continue;
    assign(b.key(), b.value());
  }
}

}  // namespace wicount
