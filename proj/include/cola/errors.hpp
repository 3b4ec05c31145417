#pragma once

#include <stdexcept>
#include <string>

namespace cola {

// Caller broke a documented precondition (illegal action, dimension
// mismatch, expanding a node with nothing left to try). These indicate
// bugs and are never caught by the search loop.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed external input: path text, dataset lines, result files.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A single evaluation could not be completed (wire failure, bad response,
// timeout). The search records these and keeps going with reward 0.
struct EvaluationError : std::runtime_error {
  explicit EvaluationError(const std::string& what, std::string raw = {})
      : std::runtime_error(what), raw_response(std::move(raw)) {}
  std::string raw_response;
};

// Bad experiment configuration or schema violation. CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Backend could not be reached at all (spawn/connect failure). CLI exit
// code 3; raised before any search starts.
struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cola
