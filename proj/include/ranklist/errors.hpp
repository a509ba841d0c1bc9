#pragma once

#include <stdexcept>
#include <string>

namespace ranklist {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files (CSV, JSON models).
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

// Invalid configuration values (non-positive sigma, bad dimensions, ...).
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

// No margin-feasible list or pair exists in the dataset.
struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& what) : Error(what) {}
};

}  // namespace ranklist
