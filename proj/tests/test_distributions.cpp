#include "riskbai/distributions.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

using namespace riskbai;

namespace {

// Density-domain oracle for the upper tail: (1/beta) * int_v^inf x f(x) dx,
// with v found by bisection on the CDF.
double var_by_bisection(const ArmDistribution& d, double alpha) {
  double lo = -1e3, hi = 1.0;
  while (d.cdf(hi) < alpha) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (d.cdf(mid) < alpha ? lo : hi) = mid;
  }
  return hi;
}

double tail_expectation(const ArmDistribution& d, double from) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate([&](double t) { return (from + t) * d.density(from + t); }, 0.0,
                              std::numeric_limits<double>::infinity(), 1e-12);
}

double cvar_oracle(const ArmDistribution& d, double alpha) {
  const double v = var_by_bisection(d, alpha);
  return tail_expectation(d, v) / (1.0 - alpha);
}

double ks_distance(const ArmDistribution& d, std::uint64_t seed) {
  auto xs = d.sample(1000000, seed);
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = d.cdf(xs[i]);
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / n),
                   std::abs(F - static_cast<double>(i + 1) / n)});
  }
  return ks;
}

double mean_of_samples(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

TEST(Sample, Constant) {
  EXPECT_EQ(ArmDistribution::constant(5.0).sample(3, 99), (std::vector<double>{5, 5, 5}));
}

TEST(Sample, LawOfLargeNumbers) {
  EXPECT_NEAR(mean_of_samples(ArmDistribution::exponential(1.0).sample(1000000, 7)), 1.0, 0.005);
  EXPECT_NEAR(mean_of_samples(ArmDistribution::lomax(1.0, 1.8).sample(1000000, 7)), 1.0, 0.05);
}

TEST(Sample, Deterministic) {
  const auto d = ArmDistribution::lomax(1.0, 2.0);
  EXPECT_EQ(d.sample(1000, 42), d.sample(1000, 42));
  EXPECT_NE(d.sample(1000, 42), d.sample(1000, 43));
  // The bulk path and single draws agree.
  Engine e(42);
  const auto bulk = d.sample(10, 42);
  for (double x : bulk) EXPECT_EQ(d.draw(e), x);
  EXPECT_THROW(d.sample(0, 1), std::invalid_argument);
}

TEST(Sample, KolmogorovSmirnov) {
  const auto base = ArmDistribution::pareto(1.0, 1.5);
  const std::vector<ArmDistribution> all{
      ArmDistribution::exponential(0.75),
      ArmDistribution::lomax(1.0, 1.8),
      ArmDistribution::pareto(1.0, 1.5),
      ArmDistribution::gaussian(-1.0, 2.0),
      ArmDistribution::tail_inflated(base, 100.0, 1.5),
      ArmDistribution::scaled(ArmDistribution::lomax(1.0, 2.0), 3.0),
  };
  std::uint64_t seed = 1;
  for (const auto& d : all) EXPECT_LT(ks_distance(d, seed++), 0.005) << d.describe();
}

TEST(Construction, RejectsInvalidParameters) {
  try {
    ArmDistribution::lomax(1.0, 1.0);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("shape"), std::string::npos);
  }
  EXPECT_THROW(ArmDistribution::exponential(0.0), std::invalid_argument);
  EXPECT_THROW(ArmDistribution::pareto(1.0, 0.9), std::invalid_argument);
  EXPECT_THROW(ArmDistribution::gaussian(0.0, -1.0), std::invalid_argument);
  EXPECT_THROW(ArmDistribution::constant(NAN), std::invalid_argument);
  EXPECT_THROW(ArmDistribution::scaled(ArmDistribution::constant(1), 0.0), std::invalid_argument);
}

TEST(Construction, LomaxFollowsMeanShapeParameterization) {
  const auto d = ArmDistribution::lomax(2.0, 3.0);  // scale 4
  for (double x : {0.5, 3.0, 40.0}) EXPECT_NEAR(d.cdf(x), 1.0 - std::pow(1.0 + x / 4.0, -3.0), 1e-15);
  EXPECT_DOUBLE_EQ(ground_truth(d, 0.9).mean, 2.0);
}

TEST(GroundTruth, PublishedLomaxValues) {
  EXPECT_NEAR(ground_truth(ArmDistribution::lomax(0.38, 2.0), 0.95).cvar_alpha, 3.0, 0.02 * 3.0);
  EXPECT_NEAR(ground_truth(ArmDistribution::lomax(1.0, 2.75), 0.95).cvar_alpha, 6.42, 0.01 * 6.42);
}

TEST(GroundTruth, GaussianAgainstClosedForm) {
  for (double alpha : {0.9, 0.95, 0.99}) {
    const double z = boost::math::quantile(boost::math::normal(), alpha);
    const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const GroundTruth g = ground_truth(ArmDistribution::gaussian(0.0, 1.0), alpha);
    EXPECT_NEAR(g.var_alpha, z, 1e-12);
    EXPECT_NEAR(g.cvar_alpha, phi / (1.0 - alpha), 1e-8 * g.cvar_alpha);
  }
  EXPECT_NEAR(ground_truth(ArmDistribution::gaussian(0.0, 1.0), 0.95).cvar_alpha, 2.0627, 1e-4);
}

TEST(GroundTruth, AnalyticMatchesDensityQuadrature) {
  const auto pareto = ArmDistribution::pareto(1.0, 1.5);
  const std::vector<ArmDistribution> all{
      ArmDistribution::exponential(1.0),     ArmDistribution::exponential(0.7132),
      ArmDistribution::lomax(1.0, 1.8),      ArmDistribution::lomax(0.5, 2.0),
      ArmDistribution::lomax(1.0, 2.75),     ArmDistribution::pareto(1.0, 1.5),
      ArmDistribution::pareto(2.0, 3.0),     ArmDistribution::gaussian(0.3, 1.7),
      ArmDistribution::tail_inflated(pareto, 100.0, 1.5),
  };
  for (const auto& d : all) {
    for (double alpha : {0.9, 0.95, 0.99}) {
      const GroundTruth g = ground_truth(d, alpha);
      EXPECT_NEAR(g.cvar_alpha, cvar_oracle(d, alpha), 1e-6 * std::abs(g.cvar_alpha))
          << d.describe() << " alpha " << alpha;
      EXPECT_NEAR(g.var_alpha, var_by_bisection(d, alpha), 1e-9 * (1.0 + std::abs(g.var_alpha)));
      EXPECT_GE(g.cvar_alpha, g.var_alpha);
    }
  }
}

TEST(GroundTruth, ParetoClosedForm) {
  const double a = 1.5, beta = 0.05;
  const GroundTruth g = ground_truth(ArmDistribution::pareto(1.0, a), 0.95);
  EXPECT_NEAR(g.mean, 3.0, 1e-14);
  EXPECT_NEAR(g.cvar_alpha, a * std::pow(beta, -1.0 / a) / (a - 1.0), 1e-12);
}

TEST(GroundTruth, Constant) {
  const GroundTruth g = ground_truth(ArmDistribution::constant(-2.5), 0.9);
  EXPECT_EQ(g.mean, -2.5);
  EXPECT_EQ(g.var_alpha, -2.5);
  EXPECT_EQ(g.cvar_alpha, -2.5);
}

TEST(GroundTruth, TranslationAndScale) {
  const double c0 = ground_truth(ArmDistribution::gaussian(0.0, 1.5), 0.95).cvar_alpha;
  for (double shift : {-3.0, 0.5, 10.0})
    EXPECT_NEAR(ground_truth(ArmDistribution::gaussian(shift, 1.5), 0.95).cvar_alpha, c0 + shift,
                1e-9);
  const auto base = ArmDistribution::lomax(1.0, 2.0);
  const GroundTruth g = ground_truth(ArmDistribution::scaled(base, 2.5), 0.95);
  EXPECT_NEAR(g.cvar_alpha, 2.5 * ground_truth(base, 0.95).cvar_alpha, 1e-12);
  EXPECT_NEAR(g.mean, 2.5, 1e-12);
}

TEST(GroundTruth, RejectsBadLevel) {
  EXPECT_THROW(ground_truth(ArmDistribution::exponential(1.0), 1.0), std::domain_error);
}

TEST(SolveMeanForCvar, Examples) {
  // Exponential CVaR is mean * (1 - log beta).
  const double k = 1.0 - std::log(0.05);
  const auto a = solve_mean_for_cvar(Family::Exponential, 0.0, 2.85, 0.95);
  EXPECT_NEAR(std::get<dist::Exponential>(a.params()).mean, 2.85 / k, 1e-6 * 2.85 / k);
  EXPECT_NEAR(std::get<dist::Exponential>(a.params()).mean, 0.7132, 1e-4);
  const auto b = solve_mean_for_cvar(Family::Exponential, 0.0, 3.0, 0.95);
  EXPECT_NEAR(std::get<dist::Exponential>(b.params()).mean, 0.7508, 1e-4);
  const auto c = solve_mean_for_cvar(Family::Constant, 0.0, 3.0, 0.95);
  EXPECT_EQ(std::get<dist::Constant>(c.params()).value, 3.0);

  for (double target : {2.55, 3.0, 6.42}) {
    const auto l = solve_mean_for_cvar(Family::Lomax, 2.0, target, 0.95);
    EXPECT_NEAR(ground_truth(l, 0.95).cvar_alpha, target, 1e-6 * target);
    const auto g = solve_mean_for_cvar(Family::Gaussian, 1.0, target, 0.95);
    EXPECT_NEAR(ground_truth(g, 0.95).cvar_alpha, target, 1e-6 * target);
  }
  const auto p = solve_mean_for_cvar(Family::Pareto, 1.5, 20.0, 0.95);
  EXPECT_NEAR(ground_truth(p, 0.95).cvar_alpha, 20.0, 1e-6 * 20.0);
  EXPECT_THROW(solve_mean_for_cvar(Family::Exponential, 0.0, -1.0, 0.95), std::invalid_argument);
}

TEST(TailInflated, Construction) {
  const auto base = ArmDistribution::pareto(1.0, 1.5);
  for (double b : {10.0, 100.0, 1000.0, 10000.0}) {
    const auto g = ArmDistribution::tail_inflated(base, b, 1.5);
    const auto& t = std::get<dist::TailInflated>(g.params());
    EXPECT_GT(t.chi1, 0.0);
    EXPECT_LT(t.chi1, 1.0);
    EXPECT_DOUBLE_EQ(t.chi1, (1.0 - std::pow(b, 1.0) * base.ccdf(b)) / base.cdf(b));
    EXPECT_NEAR(g.ccdf(2.0 * b), b * base.ccdf(2.0 * b), 1e-15);
    EXPECT_NEAR(g.cdf(0.5 * b), t.chi1 * base.cdf(0.5 * b), 1e-15);

    boost::math::quadrature::gauss_kronrod<double, 61> gk;
    boost::math::quadrature::exp_sinh<double> es;
    auto dens = [&](double x) { return g.density(x); };
    const double body = gk.integrate(dens, 1.0, b, 20, 1e-13);
    const double tail = es.integrate([&](double t) { return g.density(b + t); }, 0.0,
                                     std::numeric_limits<double>::infinity(), 1e-13);
    EXPECT_NEAR(body + tail, 1.0, 1e-8);
  }
}

TEST(TailInflated, ReportsMinimalCutoff) {
  // For an exponential base and index 1.5, chi1 < 1 exactly when b > 1.
  const auto base = ArmDistribution::exponential(1.0);
  try {
    ArmDistribution::tail_inflated(base, 1.0, 1.5);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("smallest admissible cutoff"), std::string::npos)
        << e.what();
  }
  const double bmin = min_admissible_cutoff(base, 1.5);
  EXPECT_NEAR(bmin, 1.0, 1e-6);
  EXPECT_NO_THROW(ArmDistribution::tail_inflated(base, bmin * 1.01, 1.5));
  EXPECT_THROW(ArmDistribution::tail_inflated(ArmDistribution::gaussian(0, 1), 5.0, 1.5),
               std::invalid_argument);
}

TEST(AbsoluteMoment, LomaxClosedForm) {
  // E X^p = lambda^p Gamma(p + 1) Gamma(gamma - p) / Gamma(gamma), lambda = mu (gamma - 1).
  const double mu = 1.0, gam = 1.8, p = 1.7, lam = mu * (gam - 1.0);
  const double closed = std::pow(lam, p) * std::tgamma(p + 1.0) * std::tgamma(gam - p) / std::tgamma(gam);
  const auto d = ArmDistribution::lomax(mu, gam);
  EXPECT_NEAR(absolute_moment(d, p), closed, 1e-7 * closed);
  // Exponential(1): E|X - 1|^2 = 1, E X^2 = 2.
  const auto e = ArmDistribution::exponential(1.0);
  EXPECT_NEAR(absolute_moment(e, 2.0), 2.0, 1e-9);
  EXPECT_NEAR(absolute_moment(e, 2.0, 1.0), 1.0, 1e-9);
}
