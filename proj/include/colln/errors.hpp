// Copyright 2026 The colln Contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace colln {

/// Invalid arguments, shapes or configuration values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Image input that cannot be ingested (bad PPM, wrong resolution).
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system failures; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A broken internal invariant (e.g. inconsistent pruning provenance).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class WeightErrorKind {
  BadMagic,
  UnsupportedVersion,
  MalformedHeader,
  UnknownDtype,
  Truncated,
  ChecksumMismatch,
  ShapeMismatch,
  MissingTensor,
  DuplicateTensor,
  UnknownTensor,
};

const char* to_string(WeightErrorKind kind);

/// Failures while reading or validating a VITW weight bundle.
class WeightFormatError : public std::runtime_error {
 public:
  WeightFormatError(WeightErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  WeightErrorKind kind() const noexcept { return kind_; }
  /// Message without the category prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  WeightErrorKind kind_;
  std::string detail_;
};

}  // namespace colln
