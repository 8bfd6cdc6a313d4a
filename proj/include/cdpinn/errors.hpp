#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdpinn {

// Root of every error raised by the library. The CLI maps subclasses onto
// exit codes; see cli.hpp.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class HermiticityError : public Error {
 public:
  using Error::Error;
};

class ScopeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersion : public FormatError {
 public:
  using FormatError::FormatError;
};

// `check()` names the invariant that failed ("hermiticity", "dimension", ...).
class ValidationError : public Error {
 public:
  ValidationError(std::string check, const std::string& detail)
      : Error("validation failed (" + check + "): " + detail), check_(std::move(check)) {}
  const std::string& check() const noexcept { return check_; }

 private:
  std::string check_;
};

class UnknownDistanceError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericsError : public Error {
 public:
  NumericsError(long epoch, std::size_t coordinate, const std::string& detail)
      : Error("non-finite value at epoch " + std::to_string(epoch) + ", coordinate " +
              std::to_string(coordinate) + ": " + detail),
        epoch_(epoch),
        coordinate_(coordinate) {}
  long epoch() const noexcept { return epoch_; }
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  long epoch_;
  std::size_t coordinate_;
};

class DegenerateSpectrumError : public Error {
 public:
  DegenerateSpectrumError(int m, int n, double gap, double coupling)
      : Error("coupled degeneracy between levels " + std::to_string(m) + " and " +
              std::to_string(n) + " (gap " + std::to_string(gap) + ", coupling " +
              std::to_string(coupling) + ")"),
        m_(m),
        n_(n),
        gap_(gap),
        coupling_(coupling) {}
  int m() const noexcept { return m_; }
  int n() const noexcept { return n_; }
  double gap() const noexcept { return gap_; }
  double coupling() const noexcept { return coupling_; }

 private:
  int m_;
  int n_;
  double gap_;
  double coupling_;
};

class IllConditionedError : public Error {
 public:
  IllConditionedError(double condition_number, const std::string& detail)
      : Error(detail + " (condition number " + std::to_string(condition_number) + ")"),
        condition_number_(condition_number) {}
  double condition_number() const noexcept { return condition_number_; }

 private:
  double condition_number_;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdpinn
