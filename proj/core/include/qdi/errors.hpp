#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qdi {

/// Malformed expression text. `offset` is the 0-based byte position of the offending token.
class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, UndeclaredVariable };

  ParseError(Kind kind, const std::string& message, std::size_t offset)
      : std::runtime_error(message + " at offset " + std::to_string(offset)),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

/// Evaluation left the domain of a primitive (sqrt of a negative, division by zero, ...).
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string message, std::string subexpression)
      : std::runtime_error(message + " in '" + subexpression + "'"),
        message_(std::move(message)),
        subexpression_(std::move(subexpression)) {}

  const std::string& message() const noexcept { return message_; }
  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string message_;
  std::string subexpression_;
};

/// Problem description violates an invariant. `field` names the offending entry.
class ModelError : public std::runtime_error {
 public:
  ModelError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Iterative numerical routine failed (iteration cap, combinatorial blow-up, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdi
