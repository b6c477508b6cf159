#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prospectus {

// Argument outside the mathematical domain of a function (p > 1, NaN utility, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A prospect or distribution that violates its invariants.
class InvalidProspect : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration or setup values that cannot be used (empty tariff range, b = 0, ...).
class InvalidSetup : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Quadrature, root bracketing or optimizer failure. `diagnostics` carries the
// numbers needed to reproduce the failure.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::string diagnostics = {})
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

// Data that cannot support the requested fit (separation, empty frame, ...).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. Line and column are 1-based; 0 means unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace prospectus
