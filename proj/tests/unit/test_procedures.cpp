#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "depfdr/errors.hpp"
#include "depfdr/procedures.hpp"
#include "oracles.hpp"

using namespace depfdr;

namespace {

std::vector<std::uint8_t> bits(std::initializer_list<int> v) {
  std::vector<std::uint8_t> out;
  for (const int b : v) out.push_back(static_cast<std::uint8_t>(b));
  return out;
}

std::vector<double> random_vector(std::size_t m, Rng& rng, bool clumpy) {
  std::vector<double> v(m);
  for (auto& x : v) {
    x = rng.uniform();
    if (clumpy) x = std::round(x * 8.0) / 8.0;  // forces ties and exact 0/1
  }
  return v;
}

std::vector<std::size_t> random_permutation(std::size_t m, Rng& rng) {
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = m; i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform() * static_cast<double>(i))]);
  }
  return perm;
}

bool subset(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) return false;
  }
  return true;
}

}  // namespace

// Bayes BH

TEST(BayesBH, WorkedExample) {
  const auto d = bayes_bh(std::vector<double>{0.9, 0.5, 0.1}, 0.2);
  EXPECT_EQ(d.rejections, 1U);
  EXPECT_EQ(d.reject, bits({1, 0, 0}));
  EXPECT_DOUBLE_EQ(d.threshold, 0.9);
}

TEST(BayesBH, NoEvidenceAcceptsAll) {
  const auto d = bayes_bh(std::vector<double>(10, 0.0), 0.3);
  EXPECT_EQ(d.rejections, 0U);
  EXPECT_TRUE(std::isnan(d.threshold));
}

TEST(BayesBH, CertainSignalRejectsAll) {
  const auto d = bayes_bh(std::vector<double>(10, 1.0), 0.05);
  EXPECT_EQ(d.rejections, 10U);
}

TEST(BayesBH, TiesBrokenByIndex) {
  // Top-2 average of (1, 0.5, 0.5, 0.5) is exactly 0.75; a third drops it.
  const auto d = bayes_bh(std::vector<double>{0.5, 1.0, 0.5, 0.5}, 0.25);
  EXPECT_EQ(d.rejections, 2U);
  EXPECT_EQ(d.reject, bits({1, 1, 0, 0}));
}

TEST(BayesBH, MatchesExhaustiveOracle) {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 50);
    auto q = random_vector(m, rng, trial % 4 == 0);
    for (auto& v : q) v = std::pow(v, 0.3);  // skew toward large posteriors
    const double alpha = 0.01 + 0.6 * rng.uniform();
    const auto d = bayes_bh(q, alpha);
    EXPECT_EQ(d.reject, oracle::bayes_bh_reject(q, alpha)) << "trial " << trial;
    EXPECT_EQ(d.rejections, static_cast<std::size_t>(std::count(d.reject.begin(), d.reject.end(), 1)));
  }
}

TEST(BayesBH, RaisingAPosteriorNeverLowersR) {
  Rng rng(103);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 30);
    auto q = random_vector(m, rng, false);
    for (auto& v : q) v = std::sqrt(v);
    const double alpha = 0.05 + 0.4 * rng.uniform();
    const auto before = bayes_bh(q, alpha).rejections;
    const auto i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(m));
    q[i] = q[i] + (1.0 - q[i]) * rng.uniform();
    EXPECT_GE(bayes_bh(q, alpha).rejections, before);
  }
}

// BH

TEST(BH, WorkedExample) {
  const auto d = bh(std::vector<double>{0.01, 0.04, 0.9}, 0.15);
  EXPECT_EQ(d.rejections, 2U);
  EXPECT_EQ(d.reject, bits({1, 1, 0}));
  EXPECT_DOUBLE_EQ(d.threshold, 0.04);
}

TEST(BH, AllOnesAcceptAll) {
  EXPECT_EQ(bh(std::vector<double>(20, 1.0), 0.5).rejections, 0U);
}

TEST(BH, SingleHypothesis) {
  EXPECT_EQ(bh(std::vector<double>{0.04}, 0.05).rejections, 1U);
  EXPECT_EQ(bh(std::vector<double>{0.06}, 0.05).rejections, 0U);
}

TEST(BH, StepUpNotStepDown) {
  // p_(1) fails its own threshold but p_(2) passes, so both are rejected.
  const auto d = bh(std::vector<double>{0.04, 0.045}, 0.05);
  EXPECT_EQ(d.rejections, 2U);
}

TEST(BH, MatchesNaiveOracle) {
  Rng rng(107);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 50);
    auto p = random_vector(m, rng, trial % 4 == 0);
    for (auto& v : p) v = v * v * v;  // skew toward small p-values
    const double alpha = 0.01 + 0.5 * rng.uniform();
    const auto d = bh(p, alpha);
    EXPECT_EQ(d.reject, oracle::bh_reject(p, alpha)) << "trial " << trial;
  }
}

// Shared properties

TEST(Procedures, PermutationEquivariance) {
  Rng rng(109);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    auto v = random_vector(m, rng, false);  // distinct values: no index ties
    const double alpha = 0.05 + 0.4 * rng.uniform();
    const auto perm = random_permutation(m, rng);
    std::vector<double> w(m), q(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = v[perm[i]];
    for (std::size_t i = 0; i < m; ++i) q[i] = std::sqrt(v[i]);
    std::vector<double> qw(m);
    for (std::size_t i = 0; i < m; ++i) qw[i] = q[perm[i]];
    const auto a = bh(v, alpha), b = bh(w, alpha);
    const auto c = bayes_bh(q, alpha), e = bayes_bh(qw, alpha);
    for (std::size_t i = 0; i < m; ++i) {
      EXPECT_EQ(b.reject[i], a.reject[perm[i]]);
      EXPECT_EQ(e.reject[i], c.reject[perm[i]]);
    }
  }
}

TEST(Procedures, LevelMonotonicity) {
  Rng rng(113);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    const auto v = random_vector(m, rng, trial % 3 == 0);
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = std::sqrt(v[i]);
    const double a1 = 0.01 + 0.5 * rng.uniform();
    const double a2 = a1 + (0.99 - a1) * rng.uniform();
    EXPECT_TRUE(subset(bh(v, a1).reject, bh(v, a2).reject));
    EXPECT_TRUE(subset(bayes_bh(q, a1).reject, bayes_bh(q, a2).reject));
  }
}

TEST(Procedures, InputValidation) {
  const std::vector<double> empty;
  EXPECT_THROW(bh(empty, 0.1), DomainError);
  EXPECT_THROW(bayes_bh(empty, 0.1), DomainError);
  EXPECT_THROW(bh(std::vector<double>{0.5}, 0.0), DomainError);
  EXPECT_THROW(bh(std::vector<double>{0.5}, 1.0), DomainError);
  EXPECT_THROW(bayes_bh(std::vector<double>{1.5}, 0.1), DomainError);
  EXPECT_THROW(bh(std::vector<double>{-0.1}, 0.1), DomainError);
  EXPECT_THROW(bh(std::vector<double>{std::nan("")}, 0.1), DomainError);
}

// p-values and augmented level

TEST(PValues, Examples) {
  EXPECT_DOUBLE_EQ(normal_upper_tail(0.0), 0.5);
  EXPECT_NEAR(normal_upper_tail(1.6449), 0.05, 1e-4);
  EXPECT_NEAR(normal_upper_tail(1.6448536269514722), 0.05, 1e-15);
  double previous = 1.0;
  for (double x = -5.0; x <= 37.0; x += 0.5) {
    const double p = normal_upper_tail(x);
    EXPECT_LT(p, previous);
    EXPECT_GT(p, 0.0);
    previous = p;
  }
  EXPECT_NEAR(normal_upper_tail(10.0) / 7.619853024160527e-24, 1.0, 1e-12);
  EXPECT_EQ(p_values_one_sided(std::vector<double>{0.0, 1.0}),
            (std::vector<double>{0.5, normal_upper_tail(1.0)}));
}

TEST(AugmentedAlpha, Examples) {
  const BinarySignal none(std::vector<std::uint8_t>(10, 0));
  EXPECT_DOUBLE_EQ(augmented_alpha(none, 0.2), 0.2);
  std::vector<std::uint8_t> b(10, 0);
  b[3] = 1;
  EXPECT_NEAR(augmented_alpha(BinarySignal(b), 0.2), 0.2 / 0.9, 1e-15);
  std::vector<std::uint8_t> half(10, 0);
  for (int i = 0; i < 5; ++i) half[static_cast<std::size_t>(i)] = 1;
  EXPECT_EQ(augmented_alpha(BinarySignal(half), 0.6), kAlphaCap);
  EXPECT_THROW(augmented_alpha(BinarySignal(std::vector<std::uint8_t>(4, 1)), 0.2), DegenerateError);
}

// Confusion counts

TEST(Confusion, Examples) {
  const BinarySignal truth(bits({0, 1, 0}));
  TestDecision d{bits({1, 1, 0}), 2, 0.0};
  const auto o = confusion(d, truth);
  EXPECT_EQ(o.counts.V, 1U);
  EXPECT_EQ(o.counts.S, 1U);
  EXPECT_EQ(o.counts.R, 2U);
  EXPECT_DOUBLE_EQ(o.fdp, 0.5);
  EXPECT_EQ(o.ntd, 1U);

  const auto nothing = confusion(TestDecision{bits({0, 0, 0}), 0, std::nan("")}, truth);
  EXPECT_EQ(nothing.fdp, 0.0);
  EXPECT_EQ(nothing.ntd, 0U);

  const auto exact = confusion(TestDecision{bits({0, 1, 0}), 1, 0.0}, truth);
  EXPECT_EQ(exact.fdp, 0.0);
  EXPECT_EQ(exact.ntd, truth.count_ones());

  EXPECT_THROW(confusion(TestDecision{bits({0, 1}), 1, 0.0}, truth), DomainError);
}

TEST(Confusion, IdentitiesHold) {
  Rng rng(127);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(rng.uniform() * 60);
    std::vector<std::uint8_t> t(m), r(m);
    for (std::size_t i = 0; i < m; ++i) {
      t[i] = rng.uniform() < 0.3;
      r[i] = rng.uniform() < 0.4;
    }
    const std::size_t rc = static_cast<std::size_t>(std::count(r.begin(), r.end(), 1));
    const auto o = confusion(TestDecision{r, rc, 0.0}, BinarySignal(t));
    const auto& c = o.counts;
    EXPECT_EQ(c.U + c.V, c.m0);
    EXPECT_EQ(c.T + c.S, c.m1);
    EXPECT_EQ(c.V + c.S, c.R);
    EXPECT_EQ(c.U + c.T, c.A);
    EXPECT_EQ(c.R + c.A, m);
    EXPECT_GE(o.fdp, 0.0);
    EXPECT_LE(o.fdp, 1.0);
    EXPECT_LE(o.ntd, c.m1);
  }
}
