#include "depfdr/hmm_signal.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "depfdr/errors.hpp"

namespace depfdr {

ParentChainSpec::ParentChainSpec(NullStates null_states, ProbVector pi,
                                 TransitionMatrix transition)
    : null_states_(std::move(null_states)),
      pi_(std::move(pi)),
      transition_(std::move(transition)) {
  if (null_states_.dim() != pi_.dim() || transition_.dim() != pi_.dim()) {
    throw DomainError(fmt::format("chain spec dimensions disagree: states {}, pi {}, P {}",
                                  null_states_.dim(), pi_.dim(), transition_.dim()));
  }
  for (std::size_t s = 0; s < pi_.dim(); ++s) {
    if (!null_states_.contains(s)) psig_ += pi_[s];
  }
}

BinarySignal::BinarySignal(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (std::size_t t = 0; t < bits_.size(); ++t) {
    if (bits_[t] > 1) throw DomainError(fmt::format("signal entry {} is {}, not 0/1", t, bits_[t]));
    ones_ += bits_[t];
  }
}

namespace {

std::vector<std::vector<double>> cumulative_rows(const TransitionMatrix& p) {
  std::vector<std::vector<double>> rows(p.dim(), std::vector<double>(p.dim()));
  for (std::size_t i = 0; i < p.dim(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p.dim(); ++j) rows[i][j] = acc += p(i, j);
  }
  return rows;
}

StateSequence run_chain(const ParentChainSpec& spec, std::size_t m, std::size_t start, Rng& rng) {
  const auto rows = cumulative_rows(spec.transition());
  StateSequence states(m);
  states[0] = static_cast<std::uint32_t>(start);
  for (std::size_t t = 1; t < m; ++t) {
    states[t] = static_cast<std::uint32_t>(rng.categorical(rows[states[t - 1]]));
  }
  return states;
}

}  // namespace

StateSequence simulate_chain(const ParentChainSpec& spec, std::size_t m, Rng& rng) {
  if (m == 0) throw DomainError("chain length must be positive");
  std::vector<double> cumulative(spec.dim());
  double acc = 0.0;
  for (std::size_t s = 0; s < spec.dim(); ++s) cumulative[s] = acc += spec.pi()[s];
  const std::size_t start = rng.categorical(cumulative);
  return run_chain(spec, m, start, rng);
}

StateSequence simulate_chain_from(const ParentChainSpec& spec, std::size_t m,
                                  std::size_t start_state, Rng& rng) {
  if (m == 0) throw DomainError("chain length must be positive");
  if (start_state >= spec.dim()) throw DomainError("start state out of range");
  return run_chain(spec, m, start_state, rng);
}

BinarySignal project(std::span<const std::uint32_t> states, const NullStates& null_states) {
  std::vector<std::uint8_t> bits(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (states[t] >= null_states.dim()) {
      throw DomainError(fmt::format("state {} at site {} outside 0..{}", states[t], t,
                                    null_states.dim() - 1));
    }
    bits[t] = null_states.contains(states[t]) ? 0 : 1;
  }
  return BinarySignal(std::move(bits));
}

BinarySignal simulate_signal(const ParentChainSpec& spec, std::size_t m, Rng& rng) {
  const auto states = simulate_chain(spec, m, rng);
  return project(states, spec.null_states());
}

WindowedMoments::WindowedMoments(int w, double psig_hat, std::array<std::vector<double>, 2> mu,
                                 std::array<std::vector<double>, 2> pair)
    : w_(w), psig_hat_(psig_hat), mu_(std::move(mu)), pair_(std::move(pair)) {
  if (w_ < 0) throw DomainError("half-window length must be nonnegative");
  const auto width = static_cast<std::size_t>(2 * w_ + 1);
  for (int i = 0; i < 2; ++i) {
    if (mu_[i].size() != width || pair_[i].size() != width * (width + 1) / 2) {
      throw DomainError("moment table size does not match the half-window length");
    }
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!std::all_of(mu_[i].begin(), mu_[i].end(), in_unit) ||
        !std::all_of(pair_[i].begin(), pair_[i].end(), in_unit)) {
      throw DomainError("moment table entries must lie in [0, 1]");
    }
  }
  if (!(psig_hat_ >= 0.0 && psig_hat_ <= 1.0)) throw DomainError("psig_hat must lie in [0, 1]");
}

double WindowedMoments::mu(int i, int delta) const {
  if (delta < -w_ || delta > w_) return 0.0;
  return mu_[static_cast<std::size_t>(i)][static_cast<std::size_t>(delta + w_)];
}

std::size_t WindowedMoments::packed_index(int a, int b) const {
  if (a > b) std::swap(a, b);
  const auto width = static_cast<std::size_t>(2 * w_ + 1);
  const auto r = static_cast<std::size_t>(a + w_);
  const auto c = static_cast<std::size_t>(b + w_);
  // rows r' < r contribute (width - r') entries each
  return r * width - r * (r - 1) / 2 + (c - r);
}

double WindowedMoments::pair(int i, int a, int b) const {
  if (a < -w_ || a > w_ || b < -w_ || b > w_) return 0.0;
  return pair_[static_cast<std::size_t>(i)][packed_index(a, b)];
}

WindowedMoments estimate_moments(const BinarySignal& theta, int w) {
  if (w < 0) throw DomainError("half-window length must be nonnegative");
  const std::size_t m = theta.size();
  if (m <= static_cast<std::size_t>(2 * w + 1)) {
    throw DomainError(fmt::format("training length {} must exceed 2w+1 = {}", m, 2 * w + 1));
  }
  if (theta.count_ones() == 0 || theta.count_ones() == m) {
    throw EstimationError("training signal must contain both 0s and 1s");
  }

  const int width = 2 * w + 1;
  const auto packed = static_cast<std::size_t>(width * (width + 1) / 2);
  std::array<std::vector<double>, 2> mu{std::vector<double>(width), std::vector<double>(width)};
  std::array<std::vector<double>, 2> pair{std::vector<double>(packed), std::vector<double>(packed)};

  const auto bits = theta.bits();
  const auto n = static_cast<long long>(m);

  // Hits and conditioning counts for every (a, b) with a <= b. The diagonal
  // a == b doubles as the single-offset table.
  std::array<std::vector<long long>, 2> hits{std::vector<long long>(packed),
                                             std::vector<long long>(packed)};
  std::array<std::vector<long long>, 2> base{std::vector<long long>(packed),
                                             std::vector<long long>(packed)};
  for (long long t = 0; t < n; ++t) {
    const int i = bits[static_cast<std::size_t>(t)];
    std::size_t k = 0;
    for (int a = -w; a <= w; ++a) {
      const long long sa = t + a;
      const bool a_in = sa >= 0 && sa < n;
      const int va = a_in ? bits[static_cast<std::size_t>(sa)] : 0;
      for (int b = a; b <= w; ++b, ++k) {
        const long long sb = t + b;
        if (!a_in || sb < 0 || sb >= n) continue;
        ++base[static_cast<std::size_t>(i)][k];
        if (va && bits[static_cast<std::size_t>(sb)]) ++hits[static_cast<std::size_t>(i)][k];
      }
    }
  }

  for (int i = 0; i < 2; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    std::size_t k = 0;
    for (int a = -w; a <= w; ++a) {
      for (int b = a; b <= w; ++b, ++k) {
        if (base[ii][k] == 0) {
          throw EstimationError(fmt::format(
              "no training sites with theta_t = {} and offsets ({}, {}) in range", i, a, b));
        }
        pair[ii][k] = static_cast<double>(hits[ii][k]) / static_cast<double>(base[ii][k]);
        if (a == b) mu[ii][static_cast<std::size_t>(a + w)] = pair[ii][k];
      }
    }
  }
  return WindowedMoments(w, theta.proportion(), std::move(mu), std::move(pair));
}

SiteMoments moment_vectors_at(const WindowedMoments& moments, std::size_t t, std::size_t m) {
  if (t >= m) throw DomainError(fmt::format("site {} outside 0..{}", t, m - 1));
  const auto w = static_cast<long long>(moments.w());
  const auto tt = static_cast<long long>(t);
  const long long lo = std::max(0LL, tt - w);
  const long long hi = std::min(static_cast<long long>(m) - 1, tt + w);
  const auto len = static_cast<Eigen::Index>(hi - lo + 1);

  SiteMoments out;
  out.first_site = static_cast<std::size_t>(lo);
  for (int i = 0; i < 2; ++i) {
    Vector mean(len);
    Matrix cov(len, len);
    for (Eigen::Index r = 0; r < len; ++r) {
      const int a = static_cast<int>(lo + r - tt);
      mean[r] = moments.mu(i, a);
      for (Eigen::Index c = 0; c < len; ++c) {
        const int b = static_cast<int>(lo + c - tt);
        cov(r, c) = moments.cov(i, a, b);
      }
    }
    out.mean[static_cast<std::size_t>(i)] = std::move(mean);
    out.cov[static_cast<std::size_t>(i)] = std::move(cov);
  }
  return out;
}

}  // namespace depfdr
