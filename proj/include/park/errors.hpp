#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace park {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments, shapes, configuration or files. CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Failed factorization, non-finite iterate, degenerate rank. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CholeskyError : public NumericalError {
 public:
  CholeskyError(const std::string& what, double last_jitter)
      : NumericalError(what), last_jitter_(last_jitter) {}
  double last_jitter() const { return last_jitter_; }

 private:
  double last_jitter_;
};

/// Greedy selection ran out of feature-space directions before reaching Q.
class DegenerateRankError : public NumericalError {
 public:
  DegenerateRankError(const std::string& what, std::size_t selectable)
      : NumericalError(what), selectable_(selectable) {}
  std::size_t selectable() const { return selectable_; }

 private:
  std::size_t selectable_;
};

}  // namespace park
