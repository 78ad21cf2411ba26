#pragma once
// Second-order expansion of per-site conditional log-likelihood ratios
//
//   r_t(X) = ln P(eta_t = 1 | X) / P(eta_t = 0 | X)
//
// in the signal strength epsilon, for data with density exp(q(x, eps*eta)).
// The general form needs the gradient and Hessian of q at 0 and the
// conditional first and second moments of eta given eta_t. When q splits
// into per-site terms q_t(x_t, theta_t) the Hessian is diagonal and only
// per-site derivatives gamma_t, k_t enter.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "depfdr/hmm_signal.hpp"
#include "depfdr/matrix_ensembles.hpp"

namespace depfdr {

enum class NoiseKind {
  additive,        // X = eps*eta + Z
  multiplicative,  // X = Z exp(-eps*eta)
};

// Noise Z with density exp(h(z)) and the first two derivatives of h.
struct NoiseModel {
  NoiseKind kind = NoiseKind::additive;
  std::string name;
  std::function<double(double)> h;
  std::function<double(double)> h1;
  std::function<double(double)> h2;
};

NoiseModel gaussian_noise(NoiseKind kind = NoiseKind::additive);
NoiseModel logistic_noise(NoiseKind kind = NoiseKind::additive);

// q_t(x, theta): log density of one observation given the shifted signal
// theta = eps*eta_t. Additive: h(x - theta). Multiplicative: theta + h(x e^theta).
double site_log_density(const NoiseModel& noise, double x, double theta);

// First and second theta-derivatives of q_t(x, theta) at theta = 0.
struct SiteDerivatives {
  double gamma = 0.0;
  double k = 0.0;
};

SiteDerivatives site_derivatives(const NoiseModel& noise, double x);

// (1 + x h'(x), x h'(x) + x^2 h''(x)); requires a multiplicative model.
SiteDerivatives multiplicative_gamma_k(const NoiseModel& noise, double x);

struct Observations {
  std::vector<double> x;
  double epsilon = 0.0;

  Observations() = default;
  Observations(std::vector<double> values, double eps);
  std::size_t size() const noexcept { return x.size(); }
};

// ln E exp(g(eps*eta)) to second order, given g(0), its gradient and Hessian
// at 0, and E(eta) and J = E(eta eta^T) of a binary vector eta.
double log_mgf_expansion(double g0, const Vector& grad, const Matrix& hess, const Vector& mean,
                         const Matrix& second_moment, double epsilon);

// First and second conditional moments of eta on a block of sites given
// eta_t = i: mean[i] = E_{it}(eta), second[i] = E_{it}(eta eta^T).
struct ConditionalBundle {
  std::size_t first_site = 0;
  std::array<Vector, 2> mean;
  std::array<Matrix, 2> second;

  static ConditionalBundle from(const SiteMoments& moments);
};

// General expansion with a full Hessian over the bundle's sites.
double logit_general(const Vector& gamma, const Matrix& hess, const ConditionalBundle& bundle,
                     double log_prior_odds, double epsilon);

// Localized expansion at one site; x is the full observation vector and the
// window is taken from `moments.first_site`.
double logit_localized(const Observations& obs, const NoiseModel& noise,
                       const SiteMoments& moments, double log_prior_odds);

// Localized logits for every site from a shared window table, with prior odds
// from moments.psig_hat(). Equivalent to logit_localized with
// moment_vectors_at at each t, without per-site allocation.
std::vector<double> approximate_logits(const Observations& obs, const NoiseModel& noise,
                                       const WindowedMoments& moments);

double log_odds(double p);

// Logistic transform; |r| > kSaturation maps to exactly 0 or 1.
inline constexpr double kSaturation = 700.0;
double logistic(double r);

struct PosteriorVector {
  std::vector<double> logits;
  std::vector<double> probs;
};

PosteriorVector posteriors(std::vector<double> logits);

}  // namespace depfdr
