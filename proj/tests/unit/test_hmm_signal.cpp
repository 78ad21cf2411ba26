#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "depfdr/errors.hpp"
#include "depfdr/exact_oracle.hpp"
#include "depfdr/hmm_signal.hpp"
#include "oracles.hpp"
#include "reference_matrices.hpp"

using namespace depfdr;

namespace {

ParentChainSpec published_strong() {
  const auto ref = reference::strong();
  const std::vector<std::size_t> labels{1, 2};
  return ParentChainSpec(NullStates::from_one_based(5, labels),
                         ProbVector::normalized(Eigen::Map<const Vector>(ref.pi.data(), 5)),
                         TransitionMatrix::from_rounded(ref.p));
}

ParentChainSpec iid_spec(double psig) {
  Vector pi(2);
  pi << 1.0 - psig, psig;
  const ProbVector p(pi);
  const std::vector<std::size_t> f{0};
  return ParentChainSpec(NullStates(2, f), p, TransitionMatrix::rank_one(p));
}

BinarySignal alternating(std::size_t m) {
  std::vector<std::uint8_t> bits(m);
  for (std::size_t t = 0; t < m; ++t) bits[t] = static_cast<std::uint8_t>(t % 2);
  return BinarySignal(bits);
}

}  // namespace

TEST(ParentChainSpec, PsigIsMassOutsideNullStates) {
  const auto spec = published_strong();
  EXPECT_NEAR(spec.psig(), (0.0505 + 0.0211 + 0.0283) / 0.9999, 1e-12);
  EXPECT_EQ(spec.tau(0), 0);
  EXPECT_EQ(spec.tau(4), 1);
}

TEST(ParentChainSpec, DimensionMismatch) {
  const std::vector<std::size_t> f{0};
  Vector pi(3);
  pi << 0.2, 0.3, 0.5;
  Matrix p = Matrix::Constant(2, 2, 0.5);
  EXPECT_THROW(ParentChainSpec(NullStates(3, f), ProbVector(pi), TransitionMatrix(p)), DomainError);
}

TEST(BinarySignal, RejectsNonBinary) {
  EXPECT_THROW(BinarySignal(std::vector<std::uint8_t>{0, 2}), DomainError);
  const BinarySignal s(std::vector<std::uint8_t>{0, 1, 1, 0});
  EXPECT_EQ(s.count_ones(), 2U);
  EXPECT_DOUBLE_EQ(s.proportion(), 0.5);
}

TEST(SimulateChain, RankOneIsIid) {
  Vector pi(3);
  pi << 0.5, 0.3, 0.2;
  const ProbVector p(pi);
  const std::vector<std::size_t> f{0};
  const ParentChainSpec spec(NullStates(3, f), p, TransitionMatrix::rank_one(p));
  Rng rng(1);
  const std::size_t m = 100000;
  const auto states = simulate_chain(spec, m, rng);
  ASSERT_EQ(states.size(), m);
  std::vector<double> freq(3, 0.0);
  std::size_t repeats = 0;
  for (std::size_t t = 0; t < m; ++t) {
    freq[states[t]] += 1.0 / m;
    if (t > 0 && states[t] == states[t - 1]) ++repeats;
  }
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_NEAR(freq[s], p[s], 3.0 * std::sqrt(p[s] * (1 - p[s]) / m));
  }
  // Independence: P(M_t = M_{t-1}) = sum pi^2 = 0.38.
  const double same = 0.38;
  EXPECT_NEAR(repeats / double(m - 1), same, 4.0 * std::sqrt(same * (1 - same) / m));
}

TEST(SimulateChain, PermutationDynamics) {
  Matrix p(2, 2);
  p << 0.0, 1.0, 1.0, 0.0;
  Vector pi(2);
  pi << 0.5, 0.5;
  const std::vector<std::size_t> f{0};
  const ParentChainSpec spec(NullStates(2, f), ProbVector(pi), TransitionMatrix(p));
  Rng rng(1);
  const auto states = simulate_chain_from(spec, 4, 0, rng);
  EXPECT_EQ(states, (StateSequence{0, 1, 0, 1}));
  EXPECT_THROW(simulate_chain_from(spec, 4, 2, rng), DomainError);
}

TEST(SimulateChain, PublishedMatrixOccupancy) {
  const auto spec = published_strong();
  Rng rng(Rng::derive(3, StreamTag::auxiliary));
  const auto states = simulate_chain(spec, 100000, rng);
  std::vector<double> freq(5, 0.0);
  for (const auto s : states) freq[s] += 1e-5;
  for (std::size_t s = 0; s < 5; ++s) EXPECT_NEAR(freq[s], spec.pi()[s], 0.01) << "state " << s;
}

TEST(SimulateChain, TransitionFrequencies) {
  Rng rng(9);
  const auto spec = oracle::random_chain(3, rng);
  const auto states = simulate_chain(spec, 200000, rng);
  Matrix counts = Matrix::Zero(3, 3);
  for (std::size_t t = 1; t < states.size(); ++t) counts(states[t - 1], states[t]) += 1.0;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double n = counts.row(i).sum();
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double p = spec.transition().entries()(i, j);
      EXPECT_NEAR(counts(i, j) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
    }
  }
}

TEST(Project, Examples) {
  const std::vector<std::size_t> f{0, 1};
  const NullStates nulls(5, f);
  const StateSequence states{0, 1, 2, 1, 4};
  const auto bits = project(states, nulls);
  EXPECT_EQ(std::vector<std::uint8_t>(bits.bits().begin(), bits.bits().end()),
            (std::vector<std::uint8_t>{0, 0, 1, 0, 1}));

  const StateSequence nulls_only{0, 1, 1, 0};
  EXPECT_EQ(project(nulls_only, nulls).count_ones(), 0U);

  const std::vector<std::size_t> f1{0};
  const StateSequence two{0, 1, 1, 0, 1};
  const auto b2 = project(two, NullStates(2, f1));
  for (std::size_t t = 0; t < two.size(); ++t) EXPECT_EQ(b2[t], two[t]);

  const StateSequence bad{0, 5};
  EXPECT_THROW(project(bad, nulls), DomainError);
}

// Moment estimation

TEST(EstimateMoments, AlternatingPattern) {
  const auto theta = alternating(1000);
  const auto mom = estimate_moments(theta, 1);
  EXPECT_DOUBLE_EQ(mom.psig_hat(), 0.5);
  EXPECT_DOUBLE_EQ(mom.mu(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(mom.mu(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(mom.mu(1, -1), 0.0);
  EXPECT_DOUBLE_EQ(mom.mu(0, -1), 1.0);
  EXPECT_DOUBLE_EQ(mom.pair(0, -1, 1), 1.0);
}

TEST(EstimateMoments, IidSignalConditionalEqualsMarginal) {
  const auto spec = iid_spec(0.05);
  Rng rng(17);
  const auto theta = simulate_signal(spec, 100000, rng);
  const auto mom = estimate_moments(theta, 3);
  for (int i = 0; i < 2; ++i) {
    for (int d = -3; d <= 3; ++d) {
      if (d == 0) continue;
      EXPECT_NEAR(mom.mu(i, d), 0.05, 0.01) << "i " << i << " delta " << d;
    }
    for (int a = -3; a <= 3; ++a) {
      for (int b = -3; b <= 3; ++b) {
        if (a == b || a == 0 || b == 0) continue;
        EXPECT_NEAR(mom.cov(i, a, b), 0.0, 0.01);
      }
    }
  }
}

TEST(EstimateMoments, BinaryIdentitiesAndSymmetry) {
  Rng rng(23);
  const auto spec = oracle::random_chain(4, rng);
  const auto theta = simulate_signal(spec, 5000, rng);
  const int w = 3;
  const auto mom = estimate_moments(theta, w);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(mom.mu(i, 0), static_cast<double>(i));
    for (int a = -w; a <= w; ++a) {
      EXPECT_EQ(mom.pair(i, a, a), mom.mu(i, a));
      EXPECT_NEAR(mom.pair(i, 0, a), i * mom.mu(i, a), 1e-15);
      for (int b = -w; b <= w; ++b) {
        EXPECT_EQ(mom.pair(i, a, b), mom.pair(i, b, a));
        EXPECT_GE(mom.pair(i, a, b), 0.0);
        EXPECT_LE(mom.pair(i, a, b), 1.0);
      }
    }
  }
}

TEST(EstimateMoments, MatchesDirectCounting) {
  Rng rng(29);
  const auto spec = oracle::random_chain(3, rng);
  const auto theta = simulate_signal(spec, 3000, rng);
  const int w = 2;
  const auto mom = estimate_moments(theta, w);
  for (int i = 0; i < 2; ++i) {
    for (int a = -w; a <= w; ++a) {
      for (int b = -w; b <= w; ++b) {
        EXPECT_NEAR(mom.pair(i, a, b), oracle::empirical_pair(theta, i, a, b), 1e-15);
      }
    }
  }
}

TEST(EstimateMoments, ConvergesToChainMoments) {
  const auto spec = published_strong();
  const auto exact_spec = ParentChainSpec(spec.null_states(),
                                          stationary_distribution(spec.transition()),
                                          spec.transition());
  Rng rng(Rng::derive(31, StreamTag::auxiliary));
  const auto theta = simulate_signal(exact_spec, 400000, rng);
  const int w = 3;
  const auto mom = estimate_moments(theta, w);
  const std::size_t t = 10;
  for (int i = 0; i < 2; ++i) {
    for (int a = -w; a <= w; ++a) {
      const double exact = oracle::conditional_mean(exact_spec, t, i, t + a);
      EXPECT_NEAR(mom.mu(i, a), exact, 0.02) << "i " << i << " a " << a;
      for (int b = a; b <= w; ++b) {
        const double pair = oracle::conditional_pair(exact_spec, t, i, t + a, t + b);
        EXPECT_NEAR(mom.pair(i, a, b), pair, 0.02);
      }
    }
  }
}

TEST(EstimateMoments, Errors) {
  EXPECT_THROW(estimate_moments(alternating(10), -1), DomainError);
  EXPECT_THROW(estimate_moments(alternating(7), 3), DomainError);
  EXPECT_THROW(estimate_moments(BinarySignal(std::vector<std::uint8_t>(50, 0)), 2), EstimationError);
  EXPECT_THROW(estimate_moments(BinarySignal(std::vector<std::uint8_t>(50, 1)), 2), EstimationError);
}

TEST(WindowedMoments, ValidatesInput) {
  std::array<std::vector<double>, 2> mu{std::vector<double>{0.0}, std::vector<double>{1.0}};
  std::array<std::vector<double>, 2> pair{std::vector<double>{0.0}, std::vector<double>{1.0}};
  EXPECT_NO_THROW(WindowedMoments(0, 0.1, mu, pair));
  EXPECT_THROW(WindowedMoments(0, 1.5, mu, pair), DomainError);
  auto bad = pair;
  bad[1][0] = 1.2;
  EXPECT_THROW(WindowedMoments(0, 0.1, mu, bad), DomainError);
  auto short_mu = mu;
  short_mu[0].clear();
  EXPECT_THROW(WindowedMoments(0, 0.1, short_mu, pair), DomainError);
}

TEST(WindowedMoments, OutsideWindowIsZero) {
  const auto mom = estimate_moments(alternating(100), 1);
  EXPECT_EQ(mom.mu(0, 2), 0.0);
  EXPECT_EQ(mom.pair(0, -2, 0), 0.0);
}

// Window slices

TEST(MomentVectors, ZeroWindow) {
  Rng rng(3);
  const auto spec = oracle::random_chain(3, rng);
  const auto mom = estimate_moments(simulate_signal(spec, 1000, rng), 0);
  const auto slice = moment_vectors_at(mom, 10, 1000);
  ASSERT_EQ(slice.size(), 1U);
  EXPECT_EQ(slice.first_site, 10U);
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(slice.mean[static_cast<std::size_t>(i)][0], i);
    EXPECT_EQ(slice.cov[static_cast<std::size_t>(i)](0, 0), 0.0);
  }
}

TEST(MomentVectors, TranslationInvariantInInterior) {
  Rng rng(5);
  const auto spec = oracle::random_chain(3, rng);
  const auto mom = estimate_moments(simulate_signal(spec, 2000, rng), 3);
  const auto a = moment_vectors_at(mom, 4, 100);
  const auto b = moment_vectors_at(mom, 57, 100);
  ASSERT_EQ(a.size(), 7U);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(a.mean[i], b.mean[i]);
    EXPECT_EQ(a.cov[i], b.cov[i]);
  }
  EXPECT_EQ(a.first_site, 1U);
}

TEST(MomentVectors, ClippedAtEdges) {
  const auto mom = estimate_moments(alternating(100), 3);
  const auto left = moment_vectors_at(mom, 0, 100);
  EXPECT_EQ(left.first_site, 0U);
  EXPECT_EQ(left.size(), 4U);
  EXPECT_EQ(left.mean[0][0], 0.0);  // offset 0 comes first at the left edge
  const auto right = moment_vectors_at(mom, 98, 100);
  EXPECT_EQ(right.first_site, 95U);
  EXPECT_EQ(right.size(), 5U);
  EXPECT_THROW(moment_vectors_at(mom, 100, 100), DomainError);
}

TEST(MomentVectors, IidCovarianceNearZero) {
  const auto spec = iid_spec(0.2);
  Rng rng(41);
  const auto mom = estimate_moments(simulate_signal(spec, 100000, rng), 3);
  const auto slice = moment_vectors_at(mom, 50, 100);
  for (std::size_t i = 0; i < 2; ++i) {
    Matrix off = slice.cov[i];
    off.diagonal().setZero();
    EXPECT_LT(off.cwiseAbs().maxCoeff(), 0.01);
  }
}
