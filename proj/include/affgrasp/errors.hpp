#pragma once

#include <stdexcept>
#include <string>

namespace affgrasp {

/// Precondition violations (bad shapes, out-of-range arguments, unknown task).
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidTaskError : InvalidInputError {
  using InvalidInputError::InvalidInputError;
};

/// Inputs that are formally valid but geometrically unusable
/// (zero-scale cloud, empty visible set).
struct DegenerateInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset or checkpoint that exists but fails validation; the message
/// names the offending record or file.
struct LoadError : IoError {
  using IoError::IoError;
};

struct MetricUndefinedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, int step_index)
      : std::runtime_error(msg), step(step_index) {}
  int step;
};

struct EmptyRegionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoCandidateError : std::runtime_error {
  NoCandidateError(const std::string& msg, int survivors, int region)
      : std::runtime_error(msg), coarse_survivors(survivors), region_size(region) {}
  int coarse_survivors;
  int region_size;
};

struct InvalidConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace affgrasp
