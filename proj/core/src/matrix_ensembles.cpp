#include "depfdr/matrix_ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "depfdr/errors.hpp"

namespace depfdr {

ProbVector::ProbVector(Vector entries) : entries_(std::move(entries)) {
  if (entries_.size() == 0) throw DomainError("probability vector must be nonempty");
  for (Eigen::Index i = 0; i < entries_.size(); ++i) {
    if (!(entries_[i] > 0.0) || !std::isfinite(entries_[i])) {
      throw DomainError(fmt::format("probability entry {} = {} is not strictly positive", i,
                                    entries_[i]));
    }
  }
  const double total = entries_.sum();
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw DomainError(fmt::format("probability vector sums to {:.17g}, not 1", total));
  }
}

ProbVector ProbVector::normalized(Vector raw) {
  const double total = raw.sum();
  if (!(total > 0.0)) throw DomainError("cannot normalize a vector with nonpositive mass");
  raw /= total;
  return ProbVector(std::move(raw));
}

std::vector<double> ProbVector::to_std() const {
  return {entries_.data(), entries_.data() + entries_.size()};
}

NullStates::NullStates(std::size_t d, std::span<const std::size_t> members) : mask_(d, 0) {
  for (const auto s : members) {
    if (s >= d) throw DomainError(fmt::format("null state {} outside 0..{}", s, d - 1));
    if (!mask_[s]) {
      mask_[s] = 1;
      ++count_;
    }
  }
  if (count_ == 0 || count_ == d) {
    throw DomainError("null states must form a nonempty strict subset of the state space");
  }
}

NullStates NullStates::from_one_based(std::size_t d, std::span<const std::size_t> labels) {
  std::vector<std::size_t> zero_based;
  zero_based.reserve(labels.size());
  for (const auto label : labels) {
    if (label < 1 || label > d) {
      throw DomainError(fmt::format("state label {} outside 1..{}", label, d));
    }
    zero_based.push_back(label - 1);
  }
  return NullStates(d, zero_based);
}

std::vector<std::size_t> NullStates::members() const {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < mask_.size(); ++s)
    if (mask_[s]) out.push_back(s);
  return out;
}

std::vector<std::size_t> NullStates::one_based() const {
  auto out = members();
  for (auto& s : out) ++s;
  return out;
}

TransitionMatrix::TransitionMatrix(Matrix entries, std::optional<ProbVector> stationary)
    : entries_(std::move(entries)), stationary_(std::move(stationary)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw DomainError("transition matrix must be square and nonempty");
  }
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      if (!(entries_(i, j) >= 0.0) || !std::isfinite(entries_(i, j))) {
        throw DomainError(fmt::format("transition entry ({}, {}) = {} is negative", i, j,
                                      entries_(i, j)));
      }
    }
    const double row = entries_.row(i).sum();
    if (std::abs(row - 1.0) > kRowTolerance) {
      throw DomainError(fmt::format("row {} sums to {:.17g}", i, row));
    }
  }
  if (stationary_) {
    if (stationary_->dim() != dim()) throw DomainError("stationary vector dimension mismatch");
    const double residual = stationarity_residual(*stationary_);
    if (residual > kStationaryTolerance) {
      throw DomainError(fmt::format("pi^T P deviates from pi^T by {:.3g}", residual));
    }
  }
}

TransitionMatrix TransitionMatrix::rank_one(const ProbVector& pi) {
  const auto d = static_cast<Eigen::Index>(pi.dim());
  Matrix p = Vector::Ones(d) * pi.entries().transpose();
  return TransitionMatrix(std::move(p), pi);
}

TransitionMatrix TransitionMatrix::from_rounded(const Matrix& raw) {
  Matrix p = raw;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double row = p.row(i).sum();
    if (!(row > 0.0)) throw DomainError(fmt::format("row {} has no mass", i));
    p.row(i) /= row;
  }
  return TransitionMatrix(std::move(p));
}

double TransitionMatrix::stationarity_residual(const ProbVector& pi) const {
  const Vector moved = entries_.transpose() * pi.entries();
  return (moved - pi.entries()).cwiseAbs().maxCoeff();
}

ProbVector sample_stationary_vector(const NullStates& null_states, double psig, Rng& rng) {
  if (!(psig > 0.0 && psig < 1.0)) {
    throw DomainError(fmt::format("psig = {} must lie in (0, 1)", psig));
  }
  const std::size_t d = null_states.dim();
  Vector zeta(static_cast<Eigen::Index>(d));
  for (Eigen::Index s = 0; s < zeta.size(); ++s) zeta[s] = rng.uniform();

  double null_total = 0.0;
  double signal_total = 0.0;
  for (std::size_t s = 0; s < d; ++s) {
    (null_states.contains(s) ? null_total : signal_total) += zeta[static_cast<Eigen::Index>(s)];
  }
  Vector pi(zeta.size());
  for (std::size_t s = 0; s < d; ++s) {
    const auto i = static_cast<Eigen::Index>(s);
    pi[i] = null_states.contains(s) ? (1.0 - psig) * zeta[i] / null_total
                                    : psig * zeta[i] / signal_total;
  }
  return ProbVector(std::move(pi));
}

TransitionMatrix rows_from_exponentials(Matrix draws) {
  if (draws.rows() != draws.cols() || draws.rows() < 2) {
    throw DomainError("exponential draws must form a square matrix of size at least 2");
  }
  if (!(draws.array() > 0.0).all()) throw DomainError("exponential draws must be positive");
  for (Eigen::Index i = 0; i < draws.rows(); ++i) draws.row(i) /= draws.row(i).sum();
  return TransitionMatrix(std::move(draws));
}

TransitionMatrix sample_dirichlet_transition(std::size_t d, Rng& rng) {
  if (d < 2) throw DomainError("transition matrix dimension must be at least 2");
  const auto n = static_cast<Eigen::Index>(d);
  Matrix draws(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) draws(i, j) = rng.exponential();
  }
  return rows_from_exponentials(std::move(draws));
}

std::pair<double, double> margin_residuals(const Matrix& a, const ProbVector& pi) {
  const Vector rows = a.rowwise().sum();
  const Vector cols = a.colwise().sum().transpose();
  return {(rows - pi.entries()).norm(), (cols - pi.entries()).norm()};
}

SinkhornResult sinkhorn_balance(const Matrix& a, const ProbVector& pi,
                                const SinkhornOptions& options,
                                const ResidualObserver& observer) {
  const auto d = static_cast<Eigen::Index>(pi.dim());
  if (a.rows() != d || a.cols() != d) {
    throw DomainError(fmt::format("matrix is {}x{} but pi has dimension {}", a.rows(), a.cols(), d));
  }
  if (!(options.tol > 0.0)) throw DomainError("Sinkhorn tolerance must be positive");
  if ((a.array() <= 0.0).any() || !a.allFinite()) {
    throw DomainError("Sinkhorn balancing requires a strictly positive matrix");
  }

  SinkhornResult result{a, 0, 0.0, 0.0};
  Matrix& m = result.balanced;
  const Vector& target = pi.entries();
  std::tie(result.row_residual, result.col_residual) = margin_residuals(m, pi);

  while (result.row_residual > options.tol || result.col_residual > options.tol) {
    if (result.sweeps >= options.max_iter) {
      throw ConvergenceError(
          fmt::format("Sinkhorn balancing did not reach tol {:.3g} in {} sweeps "
                      "(row residual {:.3g}, column residual {:.3g})",
                      options.tol, result.sweeps, result.row_residual, result.col_residual),
          result.sweeps, result.row_residual, result.col_residual);
    }
    // D^L = diag(A 1)^-1 diag(pi); A <- D^L A
    const Vector left = target.cwiseQuotient(m.rowwise().sum());
    m = left.asDiagonal() * m;
    // D^R = diag(1^T A)^-1 diag(pi); A <- A D^R
    const Vector right = target.cwiseQuotient(m.colwise().sum().transpose());
    m = m * right.asDiagonal();

    ++result.sweeps;
    std::tie(result.row_residual, result.col_residual) = margin_residuals(m, pi);
    if (observer) observer(result.sweeps, result.row_residual, result.col_residual);
  }
  return result;
}

TransitionMatrix to_transition(const Matrix& balanced, const ProbVector& pi) {
  const auto d = static_cast<Eigen::Index>(pi.dim());
  if (balanced.rows() != d || balanced.cols() != d) {
    throw DomainError(fmt::format("balanced matrix is {}x{} but pi has dimension {}",
                                  balanced.rows(), balanced.cols(), d));
  }
  Matrix p(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double row = balanced.row(i).sum();
    if (std::abs(row - pi.entries()[i]) > 1e-6 * pi.entries()[i]) {
      throw DomainError(fmt::format("row {} sums to {:.17g}, expected pi = {:.17g}", i, row,
                                    pi.entries()[i]));
    }
    p.row(i) = balanced.row(i) / row;
  }
  return TransitionMatrix(std::move(p), pi);
}

ProbVector stationary_distribution(const TransitionMatrix& p) {
  const auto d = static_cast<Eigen::Index>(p.dim());
  Matrix system = p.entries().transpose() - Matrix::Identity(d, d);
  system.row(d - 1).setOnes();
  Vector rhs = Vector::Zero(d);
  rhs[d - 1] = 1.0;
  Vector pi = system.fullPivLu().solve(rhs);
  if (!pi.allFinite() || (pi.array() <= 0.0).any()) {
    throw NumericalError("transition matrix has no strictly positive stationary distribution");
  }
  return ProbVector::normalized(std::move(pi));
}

SpectralSummary eigenmoduli(const Matrix& p) {
  if (p.rows() == 0 || p.rows() != p.cols()) throw DomainError("eigenmoduli needs a square matrix");
  Eigen::EigenSolver<Matrix> solver(p, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("nonsymmetric eigen-solver failed to converge");
  }
  SpectralSummary out;
  const auto& values = solver.eigenvalues();
  out.moduli.reserve(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) out.moduli.push_back(std::abs(values[i]));
  std::sort(out.moduli.begin(), out.moduli.end(), std::greater<>());
  out.slem = out.moduli.size() > 1 ? out.moduli[1] : 0.0;
  out.tlem = out.moduli.size() > 2 ? out.moduli[2] : 0.0;
  return out;
}

ConstrainedSample sample_constrained_transition(const ProbVector& pi, double lambda, double mu,
                                                Rng& rng,
                                                const ConstrainedSamplerOptions& options) {
  if (!(lambda >= 0.0 && lambda < 1.0)) {
    throw DomainError(fmt::format("slem bound lambda = {} must lie in [0, 1)", lambda));
  }
  if (lambda == 0.0) {
    auto p = TransitionMatrix::rank_one(pi);
    auto spectrum = eigenmoduli(p);
    // The rank-one spectrum is {1, 0, ..., 0}; report it exactly.
    std::fill(spectrum.moduli.begin() + 1, spectrum.moduli.end(), 0.0);
    spectrum.moduli.front() = 1.0;
    spectrum.slem = spectrum.tlem = 0.0;
    return {std::move(p), std::move(spectrum), 0};
  }
  if (!(mu >= 0.0 && mu < lambda)) {
    throw DomainError(fmt::format("tlem bound mu = {} must lie in [0, lambda = {})", mu, lambda));
  }
  if (options.max_attempts < 1) throw DomainError("max_attempts must be positive");

  double best_slem = 0.0;
  double best_tlem = 0.0;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    const auto a = sample_dirichlet_transition(pi.dim(), rng);
    const auto balanced = sinkhorn_balance(a.entries(), pi, options.sinkhorn);
    auto p = to_transition(balanced.balanced, pi);
    auto spectrum = eigenmoduli(p);
    if (spectrum.slem > best_slem || (spectrum.slem == best_slem && spectrum.tlem > best_tlem)) {
      best_slem = spectrum.slem;
      best_tlem = spectrum.tlem;
    }
    const bool slem_ok = spectrum.slem >= lambda;
    const bool tlem_ok = mu == 0.0 || spectrum.tlem >= mu;
    if (slem_ok && tlem_ok) return {std::move(p), std::move(spectrum), attempt};
  }
  throw SamplingBudgetError(
      fmt::format("no transition matrix with slem >= {} and tlem >= {} in {} attempts "
                  "(best slem {:.4f}, tlem {:.4f})",
                  lambda, mu, options.max_attempts, best_slem, best_tlem),
      options.max_attempts, best_slem, best_tlem);
}

}  // namespace depfdr
