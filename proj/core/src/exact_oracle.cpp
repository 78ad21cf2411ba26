#include "depfdr/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "depfdr/errors.hpp"

namespace depfdr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp.
class LogAccumulator {
 public:
  void add(double log_value) {
    if (log_value == kNegInf) return;
    if (log_value > max_) {
      sum_ = sum_ * std::exp(max_ - log_value) + 1.0;
      max_ = log_value;
    } else {
      sum_ += std::exp(log_value - max_);
    }
  }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

ExactPosterior finish(const std::vector<LogAccumulator>& ones, const LogAccumulator& total) {
  ExactPosterior out;
  out.log_evidence = total.value();
  if (!std::isfinite(out.log_evidence)) throw NumericalError("observations have zero likelihood");
  out.probs.resize(ones.size());
  for (std::size_t t = 0; t < ones.size(); ++t) {
    out.probs[t] = std::clamp(std::exp(ones[t].value() - out.log_evidence), 0.0, 1.0);
  }
  return out;
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

}  // namespace

BinaryVectorPrior::BinaryVectorPrior(std::size_t m, std::vector<double> probabilities)
    : m_(m), probs_(std::move(probabilities)) {
  if (m_ == 0) throw DomainError("prior needs at least one site");
  if (m_ > kMaxSites) {
    throw BudgetError(fmt::format("2^{} configurations exceed the enumeration budget", m_));
  }
  if (probs_.size() != (std::size_t{1} << m_)) {
    throw DomainError("prior table must have 2^m entries");
  }
  double total = 0.0;
  for (const double p : probs_) {
    if (!(p >= 0.0)) throw DomainError("prior probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("prior probabilities must sum to 1");
}

BinaryVectorPrior BinaryVectorPrior::independent(std::span<const double> marginals) {
  const std::size_t m = marginals.size();
  if (m == 0) throw DomainError("prior needs at least one site");
  if (m > kMaxSites) {
    throw BudgetError(fmt::format("2^{} configurations exceed the enumeration budget", m));
  }
  std::vector<double> probs(std::size_t{1} << m);
  for (std::size_t k = 0; k < probs.size(); ++k) {
    double p = 1.0;
    for (std::size_t t = 0; t < m; ++t) p *= ((k >> t) & 1U) ? marginals[t] : 1.0 - marginals[t];
    probs[k] = p;
  }
  return BinaryVectorPrior(m, std::move(probs));
}

ExactPosterior brute_force_posterior(const BinaryVectorPrior& prior, const Observations& obs,
                                     const NoiseModel& noise) {
  const std::size_t m = prior.sites();
  if (obs.size() != m) throw DomainError("prior and observations differ in length");
  std::vector<double> log_emit0(m);
  std::vector<double> log_emit1(m);
  for (std::size_t t = 0; t < m; ++t) {
    log_emit0[t] = site_log_density(noise, obs.x[t], 0.0);
    log_emit1[t] = site_log_density(noise, obs.x[t], obs.epsilon);
  }
  std::vector<LogAccumulator> ones(m);
  LogAccumulator total;
  const auto probs = prior.probabilities();
  for (std::size_t k = 0; k < probs.size(); ++k) {
    if (probs[k] <= 0.0) continue;
    double lw = std::log(probs[k]);
    for (std::size_t t = 0; t < m; ++t) lw += ((k >> t) & 1U) ? log_emit1[t] : log_emit0[t];
    total.add(lw);
    for (std::size_t t = 0; t < m; ++t)
      if ((k >> t) & 1U) ones[t].add(lw);
  }
  return finish(ones, total);
}

ExactPosterior brute_force_posterior(const ParentChainSpec& spec, const Observations& obs,
                                     const NoiseModel& noise) {
  const std::size_t m = obs.size();
  const std::size_t d = spec.dim();
  if (m == 0) throw DomainError("no observations");
  if (m > 10 || std::pow(static_cast<double>(d), static_cast<double>(m)) > kMaxParentPaths) {
    throw BudgetError(fmt::format("{}^{} parent paths exceed the enumeration budget", d, m));
  }

  std::vector<double> log_emit(m * d);
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t s = 0; s < d; ++s)
      log_emit[t * d + s] = site_log_density(noise, obs.x[t], obs.epsilon * spec.tau(s));

  std::vector<double> log_p(d * d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) log_p[i * d + j] = safe_log(spec.transition()(i, j));

  std::vector<LogAccumulator> ones(m);
  LogAccumulator total;
  std::vector<std::size_t> path(m, 0);
  std::vector<double> prefix(m + 1, 0.0);  // prefix[t+1]: log weight of path[0..t]

  // Odometer over d^m paths; prefix weights are recomputed from the first
  // changed digit onward.
  std::size_t changed = 0;
  while (true) {
    for (std::size_t t = changed; t < m; ++t) {
      const double step = t == 0 ? safe_log(spec.pi()[path[0]]) : log_p[path[t - 1] * d + path[t]];
      prefix[t + 1] = prefix[t] + step + log_emit[t * d + path[t]];
    }
    const double lw = prefix[m];
    if (lw != kNegInf) {
      total.add(lw);
      for (std::size_t t = 0; t < m; ++t)
        if (spec.tau(path[t])) ones[t].add(lw);
    }
    std::size_t pos = m;
    while (pos > 0) {
      --pos;
      if (++path[pos] < d) break;
      path[pos] = 0;
      if (pos == 0) return finish(ones, total);
    }
    changed = pos;
  }
}

ExactPosterior forward_backward_posterior(const ParentChainSpec& spec, const Observations& obs,
                                          const NoiseModel& noise) {
  const std::size_t m = obs.size();
  const auto d = static_cast<Eigen::Index>(spec.dim());
  if (m == 0) throw DomainError("no observations");
  const Matrix& p = spec.transition().entries();

  // Emissions are shifted by their per-site maximum; the shift re-enters the
  // evidence.
  Matrix emit(d, static_cast<Eigen::Index>(m));
  double log_shift_total = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    double shift = kNegInf;
    for (Eigen::Index s = 0; s < d; ++s) {
      emit(s, col) = site_log_density(noise, obs.x[t],
                                      obs.epsilon * spec.tau(static_cast<std::size_t>(s)));
      shift = std::max(shift, emit(s, col));
    }
    for (Eigen::Index s = 0; s < d; ++s) emit(s, col) = std::exp(emit(s, col) - shift);
    log_shift_total += shift;
  }

  Matrix alpha(d, static_cast<Eigen::Index>(m));
  Vector scale(static_cast<Eigen::Index>(m));
  for (std::size_t t = 0; t < m; ++t) {
    const auto col = static_cast<Eigen::Index>(t);
    Vector a = t == 0 ? Vector(spec.pi().entries()) : Vector(p.transpose() * alpha.col(col - 1));
    a = a.cwiseProduct(emit.col(col));
    const double c = a.sum();
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw NumericalError(fmt::format("forward recursion collapsed at site {}", t));
    }
    alpha.col(col) = a / c;
    scale[col] = c;
  }

  ExactPosterior out;
  out.log_evidence = scale.array().log().sum() + log_shift_total;
  out.probs.resize(m);

  Vector beta = Vector::Ones(d);
  for (std::size_t tt = m; tt-- > 0;) {
    const auto col = static_cast<Eigen::Index>(tt);
    if (tt + 1 < m) {
      const Vector weighted = emit.col(col + 1).cwiseProduct(beta);
      beta = p * weighted / scale[col + 1];
    }
    const Vector post = alpha.col(col).cwiseProduct(beta);
    const double norm = post.sum();
    double signal = 0.0;
    for (Eigen::Index s = 0; s < d; ++s)
      if (spec.tau(static_cast<std::size_t>(s))) signal += post[s];
    out.probs[tt] = std::clamp(signal / norm, 0.0, 1.0);
  }
  return out;
}

namespace {

// P(eta_{s} = 1 for every s in `ones`, eta_t = i) by propagating the initial
// law through P with indicator masks applied at constrained sites.
double joint_indicator(const ParentChainSpec& spec, std::size_t horizon, std::size_t t, int i,
                       std::size_t a, std::size_t b) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const Matrix& p = spec.transition().entries();
  Vector v = spec.pi().entries();
  for (std::size_t s = 0; s <= horizon; ++s) {
    if (s > 0) v = p.transpose() * v;
    const bool need_one = s == a || s == b;
    const bool at_t = s == t;
    if (!need_one && !at_t) continue;
    for (Eigen::Index k = 0; k < d; ++k) {
      const int bit = spec.tau(static_cast<std::size_t>(k));
      if ((need_one && bit != 1) || (at_t && bit != i)) v[k] = 0.0;
    }
  }
  return v.sum();
}

}  // namespace

double exact_marginal(const ParentChainSpec& spec, std::size_t t) {
  return joint_indicator(spec, t, t, 1, t, t);
}

ConditionalBundle exact_conditional_bundle(const ParentChainSpec& spec, std::size_t m,
                                           std::size_t t) {
  if (t >= m) throw DomainError("site outside the chain");
  const auto n = static_cast<Eigen::Index>(m);
  ConditionalBundle out;
  out.first_site = 0;
  const double p1 = exact_marginal(spec, t);
  const std::array<double, 2> given{1.0 - p1, p1};
  for (int i = 0; i < 2; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    if (!(given[ii] > 0.0)) throw DomainError("conditioning event has probability zero");
    Matrix second(n, n);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a; b < m; ++b) {
        const std::size_t horizon = std::max({a, b, t});
        const double joint = joint_indicator(spec, horizon, t, i, a, b) / given[ii];
        second(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = joint;
        second(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = joint;
      }
    }
    out.mean[ii] = second.diagonal();
    out.second[ii] = std::move(second);
  }
  return out;
}

SiteMoments exact_site_moments(const ParentChainSpec& spec, std::size_t m, std::size_t t) {
  const auto bundle = exact_conditional_bundle(spec, m, t);
  SiteMoments out;
  out.first_site = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    out.mean[i] = bundle.mean[i];
    out.cov[i] = bundle.second[i] - bundle.mean[i] * bundle.mean[i].transpose();
  }
  return out;
}

}  // namespace depfdr
