// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace wicount {

/// Tensors of a safetensors file, keyed by name, plus the file's FNV-1a
/// digest (hex) for diagnostics.
struct TensorFile {
  std::map<std::string, torch::Tensor> tensors;
  std::string digest;
};

/// Reads F32, F64 and I64 tensors. Throws CheckpointError on malformed input.
TensorFile read_safetensors(const std::filesystem::path& path);

void write_safetensors(const std::filesystem::path& path,
                       const std::map<std::string, torch::Tensor>& tensors);

/// Copies every parameter and buffer of `module` from the file by name;
/// entries in the file that the module does not have (classifier layers) are
/// ignored. Missing entries
/// or shape mismatches throw CheckpointError naming the tensor and the file
/// digest.
void load_named_tensors(torch::nn::Module& module, const std::filesystem::path& path);

}  // namespace wicount
