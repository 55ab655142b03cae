#pragma once

#include <stdexcept>
#include <string>

namespace omtherm {

// Parameter or field value outside its documented domain. The message
// always names the offending field.
class InvalidParameter : public std::invalid_argument {
public:
  InvalidParameter(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}

  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

// Mathematical domain violations (no solution, undefined rate, ...).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// Two waveforms or a waveform and a histogram do not share one time grid.
class GridMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Zero padding needed to avoid circular wraparound exceeds the FFT budget.
class PaddingError : public std::length_error {
public:
  using std::length_error::length_error;
};

class FitError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InitializationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace omtherm
