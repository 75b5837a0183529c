#include "riskbai/distributions.hpp"
#include "riskbai/estimators.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

using namespace riskbai;

namespace {

std::vector<double> one_to(int n) {
  std::vector<double> v(n);
  std::iota(v.begin(), v.end(), 1.0);
  return v;
}

// Straight transcription of the order-statistic formula on a fully sorted copy.
double cvar_by_sorting(std::vector<double> xs, double alpha) {
  std::sort(xs.begin(), xs.end(), std::greater<>());
  const double n = static_cast<double>(xs.size());
  const double nb = n * (1.0 - alpha);
  const auto fl = static_cast<std::size_t>(std::floor(nb + 1e-9));
  const auto ce = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(nb - 1e-9)));
  const double pivot = xs[ce - 1];
  double s = 0.0;
  for (std::size_t i = 0; i < fl; ++i) s += xs[i] - pivot;
  return pivot + s / nb;
}

std::vector<double> random_batch(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 200);
  std::uniform_int_distribution<int> kind(0, 2);
  std::vector<double> xs(size(rng));
  const int k = kind(rng);
  for (auto& x : xs) {
    if (k == 0) x = std::normal_distribution<double>(0.0, 3.0)(rng);
    else if (k == 1) x = std::exponential_distribution<double>(0.5)(rng);
    else x = std::uniform_int_distribution<int>(-3, 3)(rng);  // ties
  }
  return xs;
}

}  // namespace

TEST(EmpiricalCvar, HandExamples) {
  const auto xs = one_to(10);
  EXPECT_EQ(empirical_cvar(xs, 0.8), 9.5);
  EXPECT_EQ(empirical_cvar(xs, 0.95), 10.0);
  const std::vector<double> c(7, 2.25);
  EXPECT_EQ(empirical_cvar(c, 0.9), 2.25);
}

TEST(EmpiricalCvar, IntegralTailBoundary) {
  // n beta = 20 * 0.05 is 1 up to rounding; the guard makes it exactly the max.
  auto xs = one_to(20);
  EXPECT_EQ(empirical_cvar(xs, 0.95), 20.0);
  EXPECT_EQ(empirical_cvar(one_to(100), 0.9), 95.5);
}

TEST(EmpiricalCvar, RejectsBadInput) {
  EXPECT_THROW(empirical_cvar(std::vector<double>{}, 0.9), std::invalid_argument);
  EXPECT_THROW(empirical_cvar(one_to(3), 1.0), std::domain_error);
  EXPECT_THROW(empirical_cvar(one_to(3), 0.0), std::domain_error);
}

TEST(TruncatedCvar, HandExamples) {
  const auto xs = one_to(10);
  EXPECT_EQ(truncated_cvar(xs, 0.8, 5.0), 5.0);
  EXPECT_EQ(truncated_cvar(xs, 0.8, 100.0), 9.5);
  EXPECT_EQ(truncated_cvar(std::vector<double>{-10, 10}, 0.5, 3.0), 3.0);
  EXPECT_THROW(truncated_cvar(xs, 0.8, 0.0), std::invalid_argument);
}

TEST(TruncatedMean, HandExamples) {
  EXPECT_EQ(truncated_mean(one_to(10), 5.0), 1.5);
  EXPECT_EQ(truncated_mean(std::vector<double>{1, 2, 3}, 10.0), 2.0);
  EXPECT_EQ(truncated_mean(std::vector<double>{-7, 7}, 5.0), 0.0);
}

TEST(TruncatedMean, ZeroesRatherThanClips) {
  const std::vector<double> xs{1.0, 2.0, 50.0};
  double clipped = 0.0;
  for (double x : xs) clipped += std::clamp(x, -5.0, 5.0);
  clipped /= 3.0;
  EXPECT_EQ(truncated_mean(xs, 5.0), 1.0);
  EXPECT_NE(truncated_mean(xs, 5.0), clipped);
}

TEST(MedianOfBins, HandExamples) {
  EXPECT_EQ(median_of_means(one_to(6), 2), 3.5);
  EXPECT_EQ(median_of_means(one_to(4), 2), 1.5);
  EXPECT_EQ(median_of_cvars(one_to(6), 0.5, 2), 4.0);
  const std::vector<double> c(9, -1.5);
  EXPECT_EQ(median_of_cvars(c, 0.9, 3), -1.5);
  EXPECT_EQ(median_of_means(c, 4), -1.5);
}

TEST(MedianOfBins, DiscardsTrailingSamples) {
  // bins {1,2}, {3,4}; 1000 is dropped
  EXPECT_EQ(median_of_means(std::vector<double>{1, 2, 3, 4, 1000}, 2), 1.5);
}

TEST(MedianOfBins, RejectsTooFewSamples) {
  EXPECT_THROW(median_of_means(one_to(3), 4), std::invalid_argument);
  EXPECT_THROW(median_of_cvars(one_to(3), 0.9, 0), std::invalid_argument);
}

TEST(MedianOfBins, SingleBinIsEmpirical) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const auto xs = random_batch(rng);
    EXPECT_EQ(median_of_means(xs, xs.size()), empirical_mean(xs));
    EXPECT_EQ(median_of_cvars(xs, 0.9, xs.size()), empirical_cvar(xs, 0.9));
  }
}

TEST(Estimate, Dispatch) {
  const auto xs = one_to(10);
  EXPECT_EQ(estimate(EstimatorSpec::cvar(EstimatorKind::Empirical, 0.8), xs, 10), 9.5);

  std::vector<double> hundred(100);
  for (int i = 0; i < 100; ++i) hundred[i] = (i % 10) - 2.0;  // values -2..7
  const auto tm = EstimatorSpec::mean(EstimatorKind::Truncated, 0.3);
  EXPECT_NEAR(tm.truncation_level(100), 3.981071705534973, 1e-12);
  EXPECT_EQ(estimate(tm, hundred, 100), truncated_mean(hundred, std::pow(100.0, 0.3)));

  auto single = EstimatorSpec::mean(EstimatorKind::MedianOfBins, 0.999999);
  EXPECT_EQ(single.bin_size(100), 99u);
  single.prior_offset = 1.0;  // floor(1 + 100^q) = 100 = n
  EXPECT_EQ(estimate(single, hundred, 100), empirical_mean(hundred));

  EXPECT_THROW(estimate(tm, hundred, 99), std::invalid_argument);
}

TEST(Estimate, ScheduleBases) {
  auto s = EstimatorSpec::cvar(EstimatorKind::Truncated, 0.95, 0.5);
  s.prior_offset = 2.0;
  EXPECT_DOUBLE_EQ(s.truncation_level(16), 6.0);
  s.basis = ScheduleBasis::Budget;
  EXPECT_DOUBLE_EQ(s.truncation_level(16, 100), 12.0);
  EXPECT_THROW(s.truncation_level(16), std::invalid_argument);
  s.basis = ScheduleBasis::Fixed;
  EXPECT_DOUBLE_EQ(s.truncation_level(16, 100), 2.0);
  s.prior_offset = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  auto bins = EstimatorSpec::mean(EstimatorKind::MedianOfBins, 0.1);
  EXPECT_EQ(bins.bin_size(1), 1u);
}

TEST(EstimatorProperties, SandwichAndMonotoneTailAverages) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> level(0.01, 0.99);
  for (int t = 0; t < 10000; ++t) {
    auto xs = random_batch(rng);
    const double alpha = level(rng);
    ASSERT_EQ(empirical_cvar(xs, alpha), cvar_by_sorting(xs, alpha));
    // The sandwich needs nonnegative losses: both gaps carry a factor X_[ceil].
    for (auto& x : xs) x = std::abs(x);
    const double c = empirical_cvar(xs, alpha);

    std::sort(xs.begin(), xs.end(), std::greater<>());
    const double n = static_cast<double>(xs.size());
    const double nb = n * (1.0 - alpha);
    const auto fl = static_cast<std::size_t>(std::floor(nb + 1e-9));
    const auto ce = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(nb - 1e-9)));
    const double lo = std::accumulate(xs.begin(), xs.begin() + fl, 0.0) / nb;
    const double hi = std::accumulate(xs.begin(), xs.begin() + ce, 0.0) / nb;
    const double tol = 1e-12 * (1.0 + std::abs(hi));
    ASSERT_LE(lo, c + tol);
    ASSERT_LE(c, hi + tol);

    double prev = xs[0];
    double sum = 0.0;
    for (std::size_t k = 1; k <= xs.size(); ++k) {
      sum += xs[k - 1];
      const double f = sum / static_cast<double>(k);
      ASSERT_LE(f, prev + 1e-12 * (1.0 + std::abs(prev)));
      prev = f;
    }
  }
}

TEST(EstimatorProperties, AffineEquivariance) {
  // Dyadic values, scale and n beta keep every operation exact.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> v(-64, 64);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> xs(std::size_t{8} << (t % 4));
    for (auto& x : xs) x = v(rng) / 8.0;
    std::vector<double> ys(xs.size());
    std::transform(xs.begin(), xs.end(), ys.begin(), [](double x) { return 4.0 * x + 3.0; });
    for (double alpha : {0.5, 0.75, 0.875})
      EXPECT_EQ(empirical_cvar(ys, alpha), 4.0 * empirical_cvar(xs, alpha) + 3.0);
  }
}

TEST(EstimatorProperties, LargeTruncationIsEmpirical) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    const auto xs = random_batch(rng);
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    EXPECT_EQ(truncated_cvar(xs, 0.9, m + 1.0), empirical_cvar(xs, 0.9));
    EXPECT_EQ(truncated_mean(xs, m + 1.0), empirical_mean(xs));
  }
}

TEST(EstimatorProperties, PermutationBehaviour) {
  std::mt19937_64 rng(9);
  const auto xs = one_to(12);
  for (int t = 0; t < 50; ++t) {
    auto ys = xs;
    std::shuffle(ys.begin(), ys.end(), rng);
    EXPECT_EQ(empirical_cvar(ys, 0.7), empirical_cvar(xs, 0.7));
    EXPECT_EQ(truncated_cvar(ys, 0.7, 6.0), truncated_cvar(xs, 0.7, 6.0));
    EXPECT_EQ(truncated_mean(ys, 6.0), truncated_mean(xs, 6.0));
  }
  // Bins are consecutive, so reordering changes the bin contents.
  const std::vector<double> a{1, 2, 3, 4, 5, 6, 100, 200, 300};
  const std::vector<double> b{1, 100, 2, 200, 3, 300, 4, 5, 6};
  EXPECT_NE(median_of_means(a, 3), median_of_means(b, 3));
  EXPECT_NE(median_of_cvars(a, 0.5, 3), median_of_cvars(b, 0.5, 3));
}

TEST(EstimatorProperties, ConsistencyOnExponential) {
  const auto d = ArmDistribution::exponential(1.0);
  const GroundTruth g = ground_truth(d, 0.95);
  std::vector<EstimatorSpec> specs;
  for (auto k : {EstimatorKind::Empirical, EstimatorKind::Truncated, EstimatorKind::MedianOfBins}) {
    specs.push_back(EstimatorSpec::mean(k, 0.3));
    specs.push_back(EstimatorSpec::cvar(k, 0.95, 0.3));
  }
  for (const auto& spec : specs) {
    const double truth = spec.target == Target::Mean ? g.mean : g.cvar_alpha;
    int decreasing = 0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
      // Independent error levels at each n, averaged over 20 batches so that
      // the comparison reflects the rate and not a single draw.
      double err[3] = {0, 0, 0};
      const std::size_t ns[3] = {1000, 10000, 100000};
      for (int j = 0; j < 3; ++j) {
        for (std::uint64_t b = 0; b < 20; ++b) {
          const auto xs = d.sample(ns[j], derive_seed(rep, {static_cast<std::uint64_t>(j), b}));
          err[j] += std::abs(estimate(spec, xs, ns[j]) - truth);
        }
      }
      decreasing += (err[0] > err[1] && err[1] > err[2]);
    }
    EXPECT_GE(decreasing, 9) << kind_name(spec.kind) << (spec.target == Target::Mean ? " mean" : " cvar");
  }
}
