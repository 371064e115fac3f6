#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cvsc {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidBaseError : public Error {
 public:
  using Error::Error;
};

// Raised by model validation; carries every violation found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double final_mismatch, int iterations)
      : Error(what), mismatch_(final_mismatch), iterations_(iterations) {}
  double final_mismatch() const noexcept { return mismatch_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double mismatch_;
  int iterations_;
};

class ReductionError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  using Error::Error;
};

class ReferenceError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class TrimError : public Error {
 public:
  TrimError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class EigenError : public Error {
 public:
  using Error::Error;
};

class LinearizationError : public Error {
 public:
  LinearizationError(const std::string& what, std::string state)
      : Error(what), state_(std::move(state)) {}
  const std::string& state() const noexcept { return state_; }

 private:
  std::string state_;
};

}  // namespace cvsc
