#pragma once
// Random transition matrices with a prescribed stationary distribution.
//
// Pipeline: draw a Dirichlet(1,...,1) row-stochastic matrix, balance it by
// alternating row/column scaling until both margins equal pi, divide rows by
// pi, and reject until the second and third eigenmoduli clear their bounds.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "depfdr/random.hpp"

namespace depfdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Strictly positive probability vector.
class ProbVector {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit ProbVector(Vector entries);

  // Rescales a positive vector to unit mass.
  static ProbVector normalized(Vector raw);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.size()); }
  const Vector& entries() const noexcept { return entries_; }
  double operator[](std::size_t i) const { return entries_[static_cast<Eigen::Index>(i)]; }
  std::vector<double> to_std() const;

 private:
  Vector entries_;
};

// Parent states mapped to the null (eta = 0). States are 0-based here; the
// command-line and file formats use 1-based labels.
class NullStates {
 public:
  NullStates(std::size_t d, std::span<const std::size_t> members);

  static NullStates from_one_based(std::size_t d, std::span<const std::size_t> labels);

  std::size_t dim() const noexcept { return mask_.size(); }
  bool contains(std::size_t state) const { return mask_.at(state) != 0; }
  std::size_t size() const noexcept { return count_; }
  std::vector<std::size_t> members() const;
  std::vector<std::size_t> one_based() const;

 private:
  std::vector<unsigned char> mask_;
  std::size_t count_ = 0;
};

struct SpectralSummary {
  std::vector<double> moduli;  // descending
  double slem = 0.0;
  double tlem = 0.0;
};

class TransitionMatrix {
 public:
  static constexpr double kRowTolerance = 1e-10;
  static constexpr double kStationaryTolerance = 1e-8;

  explicit TransitionMatrix(Matrix entries,
                            std::optional<ProbVector> stationary = std::nullopt);

  // P = 1 pi^T: every row equals pi, so the chain is i.i.d.
  static TransitionMatrix rank_one(const ProbVector& pi);

  // For matrices printed to a few digits: rows are rescaled to unit sum.
  static TransitionMatrix from_rounded(const Matrix& raw);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const std::optional<ProbVector>& stationary() const noexcept { return stationary_; }

  // max_j |(pi^T P)_j - pi_j|
  double stationarity_residual(const ProbVector& pi) const;

 private:
  Matrix entries_;
  std::optional<ProbVector> stationary_;
};

// pi_s = (1 - psig) zeta_s / sum_F zeta on null states and psig zeta_s /
// sum_{not F} zeta elsewhere, zeta_s i.i.d. uniform(0,1) drawn in state order.
ProbVector sample_stationary_vector(const NullStates& null_states, double psig, Rng& rng);

// Rows i.i.d. uniform on the simplex via normalized exponentials, drawn
// row-major.
TransitionMatrix sample_dirichlet_transition(std::size_t d, Rng& rng);

// Normalizes each row of a positive square matrix of exponential draws.
TransitionMatrix rows_from_exponentials(Matrix draws);

struct SinkhornOptions {
  double tol = 1e-10;    // Euclidean norm of each margin residual
  int max_iter = 10000;  // full row+column sweeps
};

struct SinkhornResult {
  Matrix balanced;
  int sweeps = 0;
  double row_residual = 0.0;
  double col_residual = 0.0;
};

// Called once per completed sweep with the residuals after that sweep.
using ResidualObserver = std::function<void(int sweep, double row_residual, double col_residual)>;

SinkhornResult sinkhorn_balance(const Matrix& a, const ProbVector& pi,
                                const SinkhornOptions& options = {},
                                const ResidualObserver& observer = {});

// Euclidean residuals ||A 1 - pi|| and ||1^T A - pi^T||.
std::pair<double, double> margin_residuals(const Matrix& a, const ProbVector& pi);

// P = diag(pi)^-1 A with each row then rescaled by its own sum, which is the
// same matrix up to the balancing residual and keeps P exactly stochastic.
TransitionMatrix to_transition(const Matrix& balanced, const ProbVector& pi);

// Solves pi^T P = pi^T, sum(pi) = 1 for an irreducible stochastic P.
ProbVector stationary_distribution(const TransitionMatrix& p);

SpectralSummary eigenmoduli(const Matrix& p);
inline SpectralSummary eigenmoduli(const TransitionMatrix& p) { return eigenmoduli(p.entries()); }

struct ConstrainedSamplerOptions {
  SinkhornOptions sinkhorn;
  int max_attempts = 50000;
};

struct ConstrainedSample {
  TransitionMatrix matrix;
  SpectralSummary spectrum;
  int attempts = 0;
};

// lambda = 0 returns 1 pi^T. Otherwise redraws A (pi held fixed) until
// slem >= lambda and, when mu > 0, tlem >= mu.
ConstrainedSample sample_constrained_transition(const ProbVector& pi, double lambda, double mu,
                                                Rng& rng,
                                                const ConstrainedSamplerOptions& options = {});

}  // namespace depfdr
