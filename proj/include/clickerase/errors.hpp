// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace clickerase {

/// Dimensions of two operands disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A scalar argument is outside its domain.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller-side precondition does not hold (e.g. no positive clicks).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Inconsistent configuration: schedules, presets, layer selectors.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data failed validation (undecodable image, bbox outside image, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The preset is known but no inference runtime is available for it.
class BackboneUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace clickerase
