#pragma once
// Parent Markov chain, its binary projection, and windowed moment estimation.
//
// Sites are 0-based throughout. A WindowedMoments table is indexed by signed
// offsets delta in [-w, w] relative to a conditioning site t and is shared by
// every site under the stationarity assumption.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "depfdr/matrix_ensembles.hpp"
#include "depfdr/random.hpp"

namespace depfdr {

class ParentChainSpec {
 public:
  // pi is the law of the first state. It need not be exactly stationary for
  // P (printed matrices are rounded), but dimensions must agree.
  ParentChainSpec(NullStates null_states, ProbVector pi, TransitionMatrix transition);

  std::size_t dim() const noexcept { return pi_.dim(); }
  const NullStates& null_states() const noexcept { return null_states_; }
  const ProbVector& pi() const noexcept { return pi_; }
  const TransitionMatrix& transition() const noexcept { return transition_; }

  // Proportion of false nulls: total pi mass outside the null states.
  double psig() const noexcept { return psig_; }

  // tau(s): 0 on null states, 1 elsewhere.
  int tau(std::size_t state) const { return null_states_.contains(state) ? 0 : 1; }

 private:
  NullStates null_states_;
  ProbVector pi_;
  TransitionMatrix transition_;
  double psig_ = 0.0;
};

using StateSequence = std::vector<std::uint32_t>;

class BinarySignal {
 public:
  BinarySignal() = default;
  explicit BinarySignal(std::vector<std::uint8_t> bits);

  std::size_t size() const noexcept { return bits_.size(); }
  std::uint8_t operator[](std::size_t t) const { return bits_[t]; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t count_ones() const noexcept { return ones_; }
  double proportion() const noexcept {
    return bits_.empty() ? 0.0 : static_cast<double>(ones_) / static_cast<double>(bits_.size());
  }

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t ones_ = 0;
};

// M_0 ~ pi, M_{t+1} | M_t = s ~ row s of P.
StateSequence simulate_chain(const ParentChainSpec& spec, std::size_t m, Rng& rng);

// Same dynamics from a fixed initial state.
StateSequence simulate_chain_from(const ParentChainSpec& spec, std::size_t m,
                                  std::size_t start_state, Rng& rng);

// bit_t = 0 iff state_t is a null state.
BinarySignal project(std::span<const std::uint32_t> states, const NullStates& null_states);

// Convenience: project(simulate_chain(...)).
BinarySignal simulate_signal(const ParentChainSpec& spec, std::size_t m, Rng& rng);

class WindowedMoments {
 public:
  // Builds a table from explicit values; used by estimate_moments and when
  // loading tables from disk. mu[i] has 2w+1 entries (offset -w first);
  // pair[i] is the packed upper triangle (a <= b) of the (2w+1)^2 table.
  WindowedMoments(int w, double psig_hat, std::array<std::vector<double>, 2> mu,
                  std::array<std::vector<double>, 2> pair);

  int w() const noexcept { return w_; }
  double psig_hat() const noexcept { return psig_hat_; }

  // Estimated E(eta_{t+delta} | eta_t = i).
  double mu(int i, int delta) const;

  // Estimated E(eta_{t+a} eta_{t+b} | eta_t = i); symmetric in (a, b).
  double pair(int i, int a, int b) const;

  // Conditional covariance j - mu mu.
  double cov(int i, int a, int b) const { return pair(i, a, b) - mu(i, a) * mu(i, b); }

 private:
  std::size_t packed_index(int a, int b) const;

  int w_;
  double psig_hat_;
  std::array<std::vector<double>, 2> mu_;
  std::array<std::vector<double>, 2> pair_;
};

// Empirical conditional moments from a noiseless training realization, using
// only index pairs that lie inside [0, m).
WindowedMoments estimate_moments(const BinarySignal& theta, int w);

// Conditional mean vectors and covariance matrices of eta on a block of
// consecutive sites [first_site, first_site + size), given eta_t = 0 or 1.
struct SiteMoments {
  std::size_t first_site = 0;
  std::array<Vector, 2> mean;
  std::array<Matrix, 2> cov;

  std::size_t size() const noexcept { return static_cast<std::size_t>(mean[0].size()); }
};

// Window slice around site t for a signal of length m. Offsets falling
// outside [0, m) are dropped (they contribute zero to the expansion).
SiteMoments moment_vectors_at(const WindowedMoments& moments, std::size_t t, std::size_t m);

}  // namespace depfdr
