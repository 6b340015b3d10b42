/* Copyright 2026 The mvit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace mvit {

/// Base of every error thrown by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tensor or weight did not have the shape an operation requires.
class ShapeError : public Error {
 public:
  ShapeError(std::string op, std::string dim, std::int64_t expected,
             std::int64_t actual)
      : Error(op + ": " + dim + " expected " + std::to_string(expected) +
              ", got " + std::to_string(actual)),
        op_(std::move(op)),
        dim_(std::move(dim)),
        expected_(expected),
        actual_(actual) {}

  const std::string& op() const { return op_; }
  const std::string& dim() const { return dim_; }
  std::int64_t expected() const { return expected_; }
  std::int64_t actual() const { return actual_; }

 protected:
  ShapeError(std::string message, std::string op, std::string dim,
             std::int64_t expected, std::int64_t actual)
      : Error(std::move(message)),
        op_(std::move(op)),
        dim_(std::move(dim)),
        expected_(expected),
        actual_(actual) {}

 private:
  std::string op_;
  std::string dim_;
  std::int64_t expected_;
  std::int64_t actual_;
};

/// Spatial extent is not a multiple of what a downsampling chain needs.
class ResolutionError : public ShapeError {
 public:
  ResolutionError(const std::string& op, const std::string& dim, int multiple, int actual)
      : ShapeError(op + ": " + dim + " must be a multiple of " + std::to_string(multiple) +
                       ", got " + std::to_string(actual),
                   op, dim, multiple, actual) {}

  int required_multiple() const { return static_cast<int>(expected()); }
};

/// Invalid hyperparameters (divisibility, unsupported SR, unknown variant...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The weight store does not match the structure the config predicts.
class StructureError : public Error {
 public:
  using Error::Error;
};

/// File-level failures, tagged so callers can tell them apart.
class IoError : public Error {
 public:
  enum class Kind {
    kOpenFailed,
    kWriteFailed,
    kBadMagic,
    kUnsupportedVersion,
    kUnsupportedDtype,
    kTruncated,
    kTrailingBytes,
    kDuplicateName,
    kMalformed,
  };

  IoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(IoError::Kind kind);

}  // namespace mvit
