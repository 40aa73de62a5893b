#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hetpca {

/// Base class for every error raised by the library. `kind()` is a stable
/// lower-case tag used in machine-readable CLI error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input", what) {}
};

class InsufficientSamplesError : public Error {
 public:
  InsufficientSamplesError(std::size_t user, std::size_t count)
      : Error("insufficient-samples",
              "user " + std::to_string(user) + " has " + std::to_string(count) +
                  " sample(s); at least 2 are required"),
        user_(user),
        count_(count) {}
  std::size_t user() const noexcept { return user_; }
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t user_;
  std::size_t count_;
};

class DegenerateGapError : public Error {
 public:
  explicit DegenerateGapError(const std::string& what) : Error("degenerate-gap", what) {}
};

class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(const std::string& what) : Error("rank-deficient", what) {}
};

class SingularCovarianceError : public Error {
 public:
  explicit SingularCovarianceError(const std::string& what)
      : Error("singular-covariance", what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse", "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hetpca
