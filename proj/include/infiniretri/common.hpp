#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace infiniretri {

using TokenId = std::int32_t;
using SentenceId = std::int64_t;

/// Half-open range [start, start + length) of token positions.
struct PositionRange {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const { return start + length; }
  bool contains(std::size_t pos) const { return pos >= start && pos < end(); }
  bool overlaps(const PositionRange& other) const {
    return start < other.end() && other.start < end();
  }
  bool operator==(const PositionRange&) const = default;
};

// Error hierarchy. The CLI maps ConfigError/InputError/ShapeError to exit
// code 1 and ProviderError (and subclasses) to exit code 2.

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class WindowExceededError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class UnsupportedModeError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

}  // namespace infiniretri
