#include "depfdr/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "depfdr/errors.hpp"

namespace depfdr {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError(fmt::format("level alpha = {} must lie in (0, 1)", alpha));
  }
}

void check_unit(std::span<const double> values, const char* what) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!(values[j] >= 0.0 && values[j] <= 1.0)) {
      throw DomainError(fmt::format("{} {} = {} outside [0, 1]", what, j, values[j]));
    }
  }
}

std::vector<std::size_t> iota_indices(std::size_t m) {
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

}  // namespace

TestDecision bayes_bh(std::span<const double> probs, double alpha) {
  if (probs.empty()) throw DomainError("bayes_bh needs at least one hypothesis");
  check_alpha(alpha);
  check_unit(probs, "posterior");

  const std::size_t m = probs.size();
  auto order = iota_indices(m);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  TestDecision out;
  out.reject.assign(m, 0);
  out.threshold = std::numeric_limits<double>::quiet_NaN();

  // R = max{k : k^-1 (sum of the k largest) >= 1 - alpha}
  const double target = 1.0 - alpha;
  double sum = 0.0;
  std::size_t r = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    sum += probs[order[k - 1]];
    if (sum / static_cast<double>(k) >= target) r = k;
  }
  for (std::size_t k = 0; k < r; ++k) out.reject[order[k]] = 1;
  out.rejections = r;
  if (r > 0) out.threshold = probs[order[r - 1]];
  return out;
}

TestDecision bh(std::span<const double> p, double alpha) {
  if (p.empty()) throw DomainError("bh needs at least one hypothesis");
  check_alpha(alpha);
  check_unit(p, "p-value");

  const std::size_t m = p.size();
  auto order = iota_indices(m);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

  TestDecision out;
  out.reject.assign(m, 0);
  out.threshold = std::numeric_limits<double>::quiet_NaN();

  std::size_t r = 0;
  for (std::size_t k = m; k >= 1; --k) {
    if (p[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(m)) {
      r = k;
      break;
    }
  }
  if (r == 0) return out;
  const double cutoff = p[order[r - 1]];
  for (std::size_t j = 0; j < m; ++j) {
    if (p[j] <= cutoff) {
      out.reject[j] = 1;
      ++out.rejections;
    }
  }
  out.threshold = cutoff;
  return out;
}

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

std::vector<double> p_values_one_sided(std::span<const double> x) {
  std::vector<double> p(x.size());
  std::transform(x.begin(), x.end(), p.begin(), normal_upper_tail);
  return p;
}

double augmented_alpha(const BinarySignal& eta, double alpha) {
  check_alpha(alpha);
  if (eta.size() == 0) throw DomainError("empty signal");
  if (eta.count_ones() == eta.size()) {
    throw DegenerateError("every hypothesis is a false null; augmented level undefined");
  }
  return std::min(alpha / (1.0 - eta.proportion()), kAlphaCap);
}

Outcome confusion(const TestDecision& decision, const BinarySignal& truth) {
  if (decision.reject.size() != truth.size()) {
    throw DomainError(fmt::format("decision has {} entries but truth has {}",
                                  decision.reject.size(), truth.size()));
  }
  Outcome out;
  auto& c = out.counts;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const bool signal = truth[t] != 0;
    const bool rejected = decision.reject[t] != 0;
    if (signal) {
      ++c.m1;
      ++(rejected ? c.S : c.T);
    } else {
      ++c.m0;
      ++(rejected ? c.V : c.U);
    }
  }
  c.R = c.V + c.S;
  c.A = c.U + c.T;
  out.fdp = c.R == 0 ? 0.0 : static_cast<double>(c.V) / static_cast<double>(c.R);
  out.ntd = c.S;
  return out;
}

}  // namespace depfdr
