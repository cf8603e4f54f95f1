#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dccm {

// Error taxonomy. The CLI maps ArgumentError to exit code 2 and every other
// Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse error at line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string field, std::size_t line, const std::string& what)
      : Error(what), field_(std::move(field)), line_(line) {}
  const std::string& field() const { return field_; }
  std::size_t line() const { return line_; }

 private:
  std::string field_;
  std::size_t line_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// A metric value that may be undefined (0/0 and similar). Never NaN.
using Measure = std::optional<double>;

// Sums after sorting so the result does not depend on input order.
double ordered_sum(std::vector<double> terms);

// Nearest-rank percentile, p in (0, 100]. `values` must be non-empty.
double nearest_rank(std::span<const double> values, double p);

// Quotient that is undefined when the denominator is zero.
Measure safe_ratio(double num, double den);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace dccm
