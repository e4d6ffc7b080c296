#pragma once

#include <stdexcept>
#include <string>

namespace additivity {

// Error taxonomy mirrors the CLI exit codes: validation problems exit 2,
// sampler failures exit 3, I/O failures exit 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad cells, bad predictor text, bad configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A required column (or field) is missing from an input file.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// The sampler could not produce usable draws (e.g. every warmup
// iteration diverged).
class SamplerError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A diagnostic cannot be computed on the given draws (too few chains,
// chains too short, zero variance where a density is required).
class DiagnosticError : public Error {
 public:
  using Error::Error;
};

}  // namespace additivity
