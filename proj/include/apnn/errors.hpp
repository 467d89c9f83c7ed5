#pragma once

#include <stdexcept>
#include <string>

namespace apnn {

// Bad argument to a numerical routine (sizes, ranges, empty batches).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Differentiation request that does not fit the function being differentiated.
class InvalidRequest : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke an API contract (e.g. reverse sweep from a non-scalar node).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnsupportedInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid run configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A loss or gradient became NaN/Inf during training.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(long iteration, std::string term)
      : std::runtime_error("non-finite value in '" + term + "' at iteration " +
                           std::to_string(iteration)),
        iteration_(iteration),
        term_(std::move(term)) {}
  long iteration() const noexcept { return iteration_; }
  const std::string& term() const noexcept { return term_; }

 private:
  long iteration_;
  std::string term_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace apnn
