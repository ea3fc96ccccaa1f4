#pragma once

#include <stdexcept>
#include <string>

namespace symrl {

// Malformed block layout or symmetry declaration.
struct LayoutError : std::runtime_error {
  explicit LayoutError(const std::string& msg) : std::runtime_error(msg) {}
};

// Vector length does not match a layout.
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Transforms from different transform sets were combined.
struct SpecMismatchError : std::runtime_error {
  explicit SpecMismatchError(const std::string& msg)
      : std::runtime_error(msg) {}
};

// Invalid run configuration or file format.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during training (NaN losses and the like).
struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace symrl
