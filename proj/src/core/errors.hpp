#pragma once

#include <stdexcept>
#include <string>

namespace gatar {

// Invalid generation/training/evaluation parameters (bad dimensions, densities,
// team strings, capacity overflows).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or invariant-violating input files (world, roster, dataset, checkpoint).
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem failures: missing paths, unwritable outputs, truncated files.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Broken caller contracts: shape mismatches, payload count mismatches,
// out-of-range handles. These indicate bugs, not bad user input.
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

// Failures raised mid-computation (NaN loss, exhausted retries).
struct RuntimeFailure : std::runtime_error {
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gatar
