#pragma once

#include <stdexcept>
#include <string>

namespace chi2r {

// A parameter is outside its documented domain (m = 0, alpha >= 1, ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inputs are individually valid but inconsistent with each other,
// e.g. counts over a different number of cells than the distribution.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// External data (CSV, JSON) could not be parsed or violates its schema.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The requested computation would need more memory than the dense cap allows.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Command line or configuration misuse (missing field, bad flag value).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace chi2r
