#pragma once

#include <stdexcept>
#include <string>

namespace mcrt {

// Precondition on an argument violated (gamma out of range, wrong topology, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Rejection budget exhausted while sampling a conditioned path.
class SamplingError : public std::runtime_error {
 public:
  SamplingError(const std::string& what, unsigned long long attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  unsigned long long attempts() const noexcept { return attempts_; }

 private:
  unsigned long long attempts_;
};

// Input too large for a quadratic-cost routine.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Graph structure does not support the request (e.g. interior component
// without boundary contact).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Random walk or retry budget exceeded.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not enough data for a statistical fit.
class StatisticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mcrt
