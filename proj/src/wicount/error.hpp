// Copyright 2026 The wicount Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace wicount {

/// Base class for every error raised by the library. The C API maps each
/// subclass onto a distinct status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing dataset content (manifest rows, array files).
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite losses or other numerical breakdowns during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or weight-file problems, including fingerprint mismatches.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wicount
