#pragma once
// Exact posteriors P(eta_t = 1 | X) for small or HMM-structured instances,
// used as ground truth for the expansion and the testing procedures.

#include <cstddef>
#include <span>
#include <vector>

#include "depfdr/cond_likelihood.hpp"
#include "depfdr/hmm_signal.hpp"

namespace depfdr {

struct ExactPosterior {
  std::vector<double> probs;
  double log_evidence = 0.0;  // log marginal density of X
};

// Explicit distribution over binary vectors of length m <= 20. Entry k is the
// probability of sigma with sigma_t = bit t of k.
class BinaryVectorPrior {
 public:
  static constexpr std::size_t kMaxSites = 20;

  BinaryVectorPrior(std::size_t m, std::vector<double> probabilities);

  // Independent sites with the given P(eta_t = 1).
  static BinaryVectorPrior independent(std::span<const double> marginals);

  std::size_t sites() const noexcept { return m_; }
  std::span<const double> probabilities() const noexcept { return probs_; }

 private:
  std::size_t m_;
  std::vector<double> probs_;
};

// Literal mixture over all 2^m binary configurations.
ExactPosterior brute_force_posterior(const BinaryVectorPrior& prior, const Observations& obs,
                                     const NoiseModel& noise);

// Enumerates all d^m parent paths (m <= 10, d^m <= kMaxParentPaths).
inline constexpr double kMaxParentPaths = 2e7;
ExactPosterior brute_force_posterior(const ParentChainSpec& spec, const Observations& obs,
                                     const NoiseModel& noise);

// Scaled forward-backward over the parent chain; emission of X_t from parent
// state s is exp(q_t(x_t, eps * tau(s))).
ExactPosterior forward_backward_posterior(const ParentChainSpec& spec, const Observations& obs,
                                          const NoiseModel& noise);

// P(eta_t = 1) for the chain started from spec.pi().
double exact_marginal(const ParentChainSpec& spec, std::size_t t);

// Exact E(eta | eta_t = i) and E(eta eta^T | eta_t = i) over all m sites.
ConditionalBundle exact_conditional_bundle(const ParentChainSpec& spec, std::size_t m,
                                           std::size_t t);

// Same moments as SiteMoments (covariances), over all m sites.
SiteMoments exact_site_moments(const ParentChainSpec& spec, std::size_t m, std::size_t t);

}  // namespace depfdr
