#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace depfdr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or violated precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Iterative scaling ran out of sweeps. Carries the residuals at exit.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int sweeps, double row_residual,
                   double col_residual)
      : Error(what),
        sweeps_(sweeps),
        row_residual_(row_residual),
        col_residual_(col_residual) {}

  int sweeps() const noexcept { return sweeps_; }
  double row_residual() const noexcept { return row_residual_; }
  double col_residual() const noexcept { return col_residual_; }

 private:
  int sweeps_;
  double row_residual_;
  double col_residual_;
};

// A computation would exceed its work budget (enumeration size, attempts).
class BudgetError : public Error {
 public:
  using Error::Error;
};

// Spectral rejection sampling gave up; reports the best spectrum seen.
class SamplingBudgetError : public BudgetError {
 public:
  SamplingBudgetError(const std::string& what, int attempts, double best_slem,
                      double best_tlem)
      : BudgetError(what),
        attempts_(attempts),
        best_slem_(best_slem),
        best_tlem_(best_tlem) {}

  int attempts() const noexcept { return attempts_; }
  double best_slem() const noexcept { return best_slem_; }
  double best_tlem() const noexcept { return best_tlem_; }

 private:
  int attempts_;
  double best_slem_;
  double best_tlem_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Moment estimation impossible from the given sample.
class EstimationError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

// All samples coincide so no data-driven bandwidth exists.
class DegenerateDensityError : public DegenerateError {
 public:
  DegenerateDensityError(const std::string& what, double point_mass)
      : DegenerateError(what), point_mass_(point_mass) {}

  double point_mass() const noexcept { return point_mass_; }

 private:
  double point_mass_;
};

}  // namespace depfdr
