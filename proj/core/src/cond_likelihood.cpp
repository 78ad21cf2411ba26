#include "depfdr/cond_likelihood.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "depfdr/errors.hpp"

namespace depfdr {

NoiseModel gaussian_noise(NoiseKind kind) {
  const double log_norm = 0.5 * std::log(2.0 * std::numbers::pi);
  return {kind, "gaussian",
          [log_norm](double z) { return -0.5 * z * z - log_norm; },
          [](double z) { return -z; },
          [](double) { return -1.0; }};
}

NoiseModel logistic_noise(NoiseKind kind) {
  return {kind, "logistic",
          [](double z) {
            const double a = std::abs(z);
            return -a - 2.0 * std::log1p(std::exp(-a));
          },
          [](double z) { return -std::tanh(0.5 * z); },
          [](double z) {
            const double c = std::cosh(0.5 * z);
            return -0.5 / (c * c);
          }};
}

double site_log_density(const NoiseModel& noise, double x, double theta) {
  switch (noise.kind) {
    case NoiseKind::additive:
      return noise.h(x - theta);
    case NoiseKind::multiplicative:
      return theta + noise.h(x * std::exp(theta));
  }
  return 0.0;
}

SiteDerivatives multiplicative_gamma_k(const NoiseModel& noise, double x) {
  if (noise.kind != NoiseKind::multiplicative) {
    throw DomainError("multiplicative_gamma_k requires a multiplicative noise model");
  }
  const double xh1 = x * noise.h1(x);
  return {1.0 + xh1, xh1 + x * x * noise.h2(x)};
}

SiteDerivatives site_derivatives(const NoiseModel& noise, double x) {
  if (noise.kind == NoiseKind::multiplicative) return multiplicative_gamma_k(noise, x);
  return {-noise.h1(x), noise.h2(x)};
}

Observations::Observations(std::vector<double> values, double eps)
    : x(std::move(values)), epsilon(eps) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw DomainError(fmt::format("signal strength {} must be finite and nonnegative", epsilon));
  }
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (!std::isfinite(x[t])) throw DomainError(fmt::format("observation {} is not finite", t));
  }
}

double log_mgf_expansion(double g0, const Vector& grad, const Matrix& hess, const Vector& mean,
                         const Matrix& second_moment, double epsilon) {
  const auto n = grad.size();
  if (hess.rows() != n || hess.cols() != n || mean.size() != n || second_moment.rows() != n ||
      second_moment.cols() != n) {
    throw DomainError("log_mgf_expansion: dimension mismatch");
  }
  const Matrix cov = second_moment - mean * mean.transpose();
  const double first = grad.dot(mean);
  const double second = (hess.cwiseProduct(second_moment.transpose())).sum()  // tr(H J)
                        + grad.dot(cov * grad);
  return g0 + first * epsilon + 0.5 * second * epsilon * epsilon;
}

ConditionalBundle ConditionalBundle::from(const SiteMoments& moments) {
  ConditionalBundle out;
  out.first_site = moments.first_site;
  for (std::size_t i = 0; i < 2; ++i) {
    out.mean[i] = moments.mean[i];
    out.second[i] = moments.cov[i] + moments.mean[i] * moments.mean[i].transpose();
  }
  return out;
}

double logit_general(const Vector& gamma, const Matrix& hess, const ConditionalBundle& bundle,
                     double log_prior_odds, double epsilon) {
  // ln rho_{1t} - ln rho_{0t}; the common g(0) = q(X, 0) cancels.
  const double one = log_mgf_expansion(0.0, gamma, hess, bundle.mean[1], bundle.second[1], epsilon);
  const double zero = log_mgf_expansion(0.0, gamma, hess, bundle.mean[0], bundle.second[0], epsilon);
  return log_prior_odds + one - zero;
}

double logit_localized(const Observations& obs, const NoiseModel& noise,
                       const SiteMoments& moments, double log_prior_odds) {
  const auto len = static_cast<Eigen::Index>(moments.size());
  if (moments.first_site + moments.size() > obs.size()) {
    throw DomainError("moment window extends past the observations");
  }
  Vector gamma(len);
  Vector k(len);
  for (Eigen::Index r = 0; r < len; ++r) {
    const auto d = site_derivatives(noise, obs.x[moments.first_site + static_cast<std::size_t>(r)]);
    gamma[r] = d.gamma;
    k[r] = d.k;
  }
  const Vector d_mean = moments.mean[1] - moments.mean[0];
  const Matrix d_cov = moments.cov[1] - moments.cov[0];
  const double eps = obs.epsilon;
  return log_prior_odds + gamma.dot(d_mean) * eps + 0.5 * k.dot(d_mean) * eps * eps +
         0.5 * gamma.dot(d_cov * gamma) * eps * eps;
}

std::vector<double> approximate_logits(const Observations& obs, const NoiseModel& noise,
                                       const WindowedMoments& moments) {
  const std::size_t m = obs.size();
  const int w = moments.w();
  const int width = 2 * w + 1;
  const double eps = obs.epsilon;
  const double prior = log_odds(moments.psig_hat());

  std::vector<double> d_mean(static_cast<std::size_t>(width));
  std::vector<double> d_cov(static_cast<std::size_t>(width * width));
  for (int a = -w; a <= w; ++a) {
    d_mean[static_cast<std::size_t>(a + w)] = moments.mu(1, a) - moments.mu(0, a);
    for (int b = -w; b <= w; ++b) {
      d_cov[static_cast<std::size_t>((a + w) * width + (b + w))] =
          moments.cov(1, a, b) - moments.cov(0, a, b);
    }
  }

  std::vector<double> gamma(m);
  std::vector<double> k(m);
  for (std::size_t s = 0; s < m; ++s) {
    const auto d = site_derivatives(noise, obs.x[s]);
    gamma[s] = d.gamma;
    k[s] = d.k;
  }

  std::vector<double> logits(m);
  const auto n = static_cast<long long>(m);
  for (long long t = 0; t < n; ++t) {
    const int lo = static_cast<int>(std::max<long long>(-w, -t));
    const int hi = static_cast<int>(std::min<long long>(w, n - 1 - t));
    double linear = 0.0;
    double curvature = 0.0;
    double quadratic = 0.0;
    for (int a = lo; a <= hi; ++a) {
      const auto sa = static_cast<std::size_t>(t + a);
      const double dm = d_mean[static_cast<std::size_t>(a + w)];
      linear += gamma[sa] * dm;
      curvature += k[sa] * dm;
      const double* row = &d_cov[static_cast<std::size_t>((a + w) * width)];
      double inner = 0.0;
      for (int b = lo; b <= hi; ++b) inner += row[b + w] * gamma[static_cast<std::size_t>(t + b)];
      quadratic += gamma[sa] * inner;
    }
    logits[static_cast<std::size_t>(t)] =
        prior + linear * eps + 0.5 * (curvature + quadratic) * eps * eps;
  }
  return logits;
}

double log_odds(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError(fmt::format("log odds undefined at p = {}", p));
  return std::log(p) - std::log1p(-p);
}

double logistic(double r) {
  if (r > kSaturation) return 1.0;
  if (r < -kSaturation) return 0.0;
  if (r >= 0.0) return 1.0 / (1.0 + std::exp(-r));
  const double e = std::exp(r);
  return e / (1.0 + e);
}

PosteriorVector posteriors(std::vector<double> logits) {
  PosteriorVector out;
  out.probs.resize(logits.size());
  for (std::size_t t = 0; t < logits.size(); ++t) {
    if (std::isnan(logits[t])) throw DomainError(fmt::format("logit {} is NaN", t));
    out.probs[t] = logistic(logits[t]);
  }
  out.logits = std::move(logits);
  return out;
}

}  // namespace depfdr
