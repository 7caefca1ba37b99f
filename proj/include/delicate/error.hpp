#pragma once

#include <stdexcept>
#include <string>

namespace delicate {

// Base class for all recoverable errors raised by the library. Everything
// deriving from Error signals bad input or configuration; anything else
// escaping the library is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed serialized input (JSON, TSV, binary headers).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input violating a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failure while building a persistent artifact (index, lookup store).
class IngestError : public Error {
 public:
  using Error::Error;
};

// Bad runtime configuration (roots, presets, hyper-parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Entity id present in the index but absent from the lookup store.
class MissingEntityError : public Error {
 public:
  using Error::Error;
};

// Embedding provider could not produce a vector for a mention.
class ProviderError : public Error {
 public:
  using Error::Error;
};

// Training set cannot support fitting (e.g. single-class labels).
class DegenerateTrainingError : public Error {
 public:
  using Error::Error;
};

// Correlation statistics undefined for the given sample.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// Predictions and gold annotations do not align one-to-one.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Fine-grained type string absent from the type-mapping table.
class UnmappedTypeError : public Error {
 public:
  explicit UnmappedTypeError(const std::string& fine_type)
      : Error("unmapped fine-grained entity type: \"" + fine_type + "\""),
        fine_type_(fine_type) {}

  const std::string& fine_type() const { return fine_type_; }

 private:
  std::string fine_type_;
};

}  // namespace delicate
