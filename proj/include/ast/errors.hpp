#pragma once

#include <stdexcept>
#include <string>

namespace ast {

/// Base for every error raised by the pipeline.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid ToneSet / SkinSpec / ProtocolSpec or malformed configuration text.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the physical domain of an operation (gain > 1, depth > max_depth, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or mismatched input data (frame length, NaN, bad CSV/PCM).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A calibration or evaluation protocol that cannot be carried out on the given skin.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorisation failed even after the maximum jitter.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

/// A bundle and a dataset (or two files) do not come from the same configuration.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ast
