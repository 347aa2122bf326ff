#pragma once

#include <stdexcept>
#include <string>

namespace lptr {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A configuration that the algorithms do not support (e.g. nonconvex prox in H01).
class UnsupportedConfiguration : public Error {
 public:
  using Error::Error;
};

/// A run configuration that cannot be executed as given (bad flag values,
/// incompatible variant and space).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An inner iterative solver hit its iteration cap.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The scalar prox inner iteration failed; carries both candidate minimizers.
class ProxFailure : public Error {
 public:
  ProxFailure(const std::string& what, double small_candidate, double large_candidate)
      : Error(what), small_candidate_(small_candidate), large_candidate_(large_candidate) {}

  double small_candidate() const noexcept { return small_candidate_; }
  double large_candidate() const noexcept { return large_candidate_; }

 private:
  double small_candidate_;
  double large_candidate_;
};

/// The Cauchy point search backtracked until the step length underflowed.
class DegenerateStep : public Error {
 public:
  using Error::Error;
};

/// No positive fraction of the path stays inside the trust region.
class NoFeasibleStep : public Error {
 public:
  using Error::Error;
};

#define LPTR_REQUIRE(cond, msg)                                                   \
  do {                                                                            \
    if (!(cond)) throw ::lptr::ContractViolation(std::string("lptr: ") + (msg));  \
  } while (0)

}  // namespace lptr
