#pragma once
// Bayes BH on posterior probabilities, BH on p-values, and outcome counts.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "depfdr/hmm_signal.hpp"

namespace depfdr {

struct TestDecision {
  std::vector<std::uint8_t> reject;
  std::size_t rejections = 0;  // R
  double threshold = 0.0;      // R-th most significant value; NaN when R = 0
};

// Rejects the R hypotheses with the largest posteriors, where R is the
// largest k whose top-k running average is at least 1 - alpha. Ties are
// broken by index so exactly R hypotheses are rejected.
TestDecision bayes_bh(std::span<const double> probs, double alpha);

// Step-up: R = max{k : p_(k) <= k alpha / m}; rejects every p <= p_(R).
TestDecision bh(std::span<const double> p, double alpha);

// Upper standard-normal tail 1 - Phi(x), accurate far into the tail.
double normal_upper_tail(double x);

// One-sided p-values under the N(0, 1) null.
std::vector<double> p_values_one_sided(std::span<const double> x);

// alpha / (1 - proportion of ones in eta), capped just below 1.
inline constexpr double kAlphaCap = 1.0 - 1e-12;
double augmented_alpha(const BinarySignal& eta, double alpha);

struct ConfusionCounts {
  std::size_t U = 0;  // true nulls accepted
  std::size_t V = 0;  // false discoveries
  std::size_t T = 0;  // false nondiscoveries
  std::size_t S = 0;  // true discoveries
  std::size_t R = 0;
  std::size_t A = 0;
  std::size_t m0 = 0;
  std::size_t m1 = 0;
};

struct Outcome {
  ConfusionCounts counts;
  double fdp = 0.0;     // V / max(R, 1)
  std::size_t ntd = 0;  // S
};

Outcome confusion(const TestDecision& decision, const BinarySignal& truth);

}  // namespace depfdr
