#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "depfdr/errors.hpp"
#include "depfdr/kde.hpp"
#include "depfdr/random.hpp"

using namespace depfdr;

namespace {

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return s;
}

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST(Kde, RepeatedValueWithBandwidthIsGaussianBump) {
  const std::vector<double> samples(5, 2.0);
  const auto grid = linspace(-1.0, 5.0, 61);
  const auto dens = kde(samples, grid, 0.5);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    EXPECT_NEAR(dens[g], phi((grid[g] - 2.0) / 0.5) / 0.5, 1e-14);
  }
}

TEST(Kde, DegenerateSamplesReportPointMass) {
  const std::vector<double> samples(8, 0.25);
  try {
    silverman_bandwidth(samples);
    FAIL() << "expected DegenerateDensityError";
  } catch (const DegenerateDensityError& e) {
    EXPECT_EQ(e.point_mass(), 0.25);
  }
  EXPECT_THROW(kde(samples, linspace(0, 1, 3)), DegenerateError);
}

TEST(Kde, StandardNormalConsistency) {
  Rng rng(Rng::derive(5, StreamTag::auxiliary));
  std::vector<double> samples(10000);
  for (auto& v : samples) v = rng.normal();
  const auto grid = linspace(-3.0, 3.0, 121);
  const auto dens = kde(samples, grid);
  double worst = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) worst = std::max(worst, std::abs(dens[g] - phi(grid[g])));
  EXPECT_LE(worst, 0.02);
}

TEST(Kde, IntegratesToOne) {
  Rng rng(7);
  std::vector<double> samples(500);
  for (auto& v : samples) v = rng.exponential();
  const double h = silverman_bandwidth(samples);
  const auto grid = linspace(-10.0 * h - 1.0, 40.0, 20001);
  EXPECT_NEAR(trapezoid(grid, kde(samples, grid)), 1.0, 1e-3);
}

TEST(Kde, SilvermanRule) {
  // sd = sqrt(5/3) for {-2..2} with n-1 denominators; IQR (type 7) = 2.
  const std::vector<double> s{-2, -1, 0, 1, 2};
  const double sd = std::sqrt(10.0 / 4.0);
  const double expected = 0.9 * std::min(sd, 2.0 / 1.34) * std::pow(5.0, -0.2);
  EXPECT_NEAR(silverman_bandwidth(s), expected, 1e-15);
  // Zero IQR falls back to the standard deviation.
  const std::vector<double> spiky{0, 0, 0, 0, 0, 0, 0, 0, 0, 10};
  EXPECT_GT(silverman_bandwidth(spiky), 0.0);
}

TEST(Kde, Validation) {
  EXPECT_THROW(silverman_bandwidth(std::vector<double>{1.0}), DomainError);
  EXPECT_THROW(kde(std::vector<double>{0.0, 1.0}, std::vector<double>{0.0}, -1.0), DomainError);
  EXPECT_EQ(linspace(0, 1, 5), (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
}
