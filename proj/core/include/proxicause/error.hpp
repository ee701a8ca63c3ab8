#pragma once

#include <stdexcept>
#include <string>

namespace proxicause {

// Base of every error raised by the library. Subclasses mark the failure
// category so callers (the CLI, the experiment harness) can map them.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class MissingColumnError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Design matrix is rank deficient (or has fewer rows than columns).
class SingularDesignError : public Error {
 public:
  using Error::Error;
};

// A penalized feature has zero variance, so it cannot be standardized.
class DegenerateFeatureError : public Error {
 public:
  using Error::Error;
};

// Selection produced no (or too few) rows.
class DegenerateSampleError : public Error {
 public:
  using Error::Error;
};

class GraphError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace proxicause
