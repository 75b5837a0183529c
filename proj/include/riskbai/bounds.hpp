#pragma once

// Closed-form concentration bounds, validity thresholds and constants for the
// estimators in estimators.hpp and the RA-GSR error probability.
//
// Probability bounds come back as {raw, value}: `raw` is the expression as
// written, `value` is the same number clamped to [0, 1]. Everything here
// assumes a moment index p in (1, 2] unless a function says otherwise.

#include "riskbai/bandit.hpp"
#include "riskbai/distributions.hpp"
#include "riskbai/objective.hpp"
#include "riskbai/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskbai {

/// Moment prior: E|X|^p <= B, E|X - EX|^p <= V, and a deviation or gap Delta.
struct MomentPrior {
  double p = 2.0;
  double B = 1.0;
  double V = 1.0;
  double Delta = 1.0;

  void validate() const {
    if (!(p > 1.0 && p <= 2.0)) throw std::domain_error("moment prior: p must lie in (1, 2]");
    if (!(B >= 0.0 && V >= 0.0) || !std::isfinite(B) || !std::isfinite(V))
      throw std::domain_error("moment prior: B and V must be finite and nonnegative");
    if (!(Delta >= 0.0) || !std::isfinite(Delta))
      throw std::domain_error("moment prior: Delta must be finite and nonnegative");
  }
};

struct Probability {
  double raw;
  double value;
};

inline Probability clamp_probability(double raw) {
  const double v = std::isnan(raw) ? 1.0 : std::clamp(raw, 0.0, 1.0);
  return {raw, v};
}

namespace detail {

inline double beta_of(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0, 1)");
  return 1.0 - alpha;
}

inline double dn(std::size_t n) { return static_cast<double>(n); }

}  // namespace detail

/// V_emp = 2^{p-1} V / beta + 2^p B / beta.
inline double v_emp(const MomentPrior& prior, double alpha) {
  const double beta = detail::beta_of(alpha);
  return std::pow(2.0, prior.p - 1.0) * prior.V / beta + std::pow(2.0, prior.p) * prior.B / beta;
}

/// (p, B, V) for a known distribution: B = E|X|^p and V = E|X - EX|^p by
/// quadrature, each inflated by (1 + slack) so the moment conditions hold
/// strictly. Delta is left at `Delta`.
inline MomentPrior moment_prior_of(const ArmDistribution& d, double p, double Delta = 1.0,
                                   double slack = 1e-6) {
  const double mu = mean_of(d);
  return {p, absolute_moment(d, p, 0.0) * (1.0 + slack), absolute_moment(d, p, mu) * (1.0 + slack),
          Delta};
}

// ---------------------------------------------------------------------------
// Empirical CVaR

enum class Side { Lower, Upper };

/// P(c_hat <= c - Delta) (Lower) or P(c_hat >= c + Delta) (Upper) for the
/// empirical CVaR of n samples.
inline Probability empirical_cvar_dev_bound(const MomentPrior& prior, double alpha, std::size_t n,
                                            Side side) {
  prior.validate();
  const double beta = detail::beta_of(alpha);
  const double p = prior.p;
  const double B = prior.B;
  const double D = prior.Delta;
  const double nb = detail::dn(n) * beta;
  const double ve = v_emp(prior, alpha);
  const double poly = ve / (std::pow(nb, p - 1.0) * std::pow(D, p));
  if (side == Side::Lower) {
    const double ratio = D * D * std::pow(beta, 2.0 / p) / std::pow(B, 2.0 / p);
    return clamp_probability(180.0 * poly + std::exp(-nb / 8.0 * std::min(1.0, ratio)));
  }
  const double t1 = 360.0 * poly;
  const double t2 = 72.0 * ve * beta / (std::pow(nb, p - 1.0) * B);
  const double t3 = std::exp(-detail::dn(n) * std::pow(beta, 1.0 + 2.0 / p) * D * D /
                             (8.0 * std::pow(B, 2.0 / p) + 2.0 * D * std::pow(B * beta, 1.0 / p)));
  const double t4 = std::exp(-nb / 8.0);
  return clamp_probability(t1 + t2 + t3 + t4);
}

/// Sum of both one-sided bounds: a bound on P(|c_hat - c| >= Delta).
inline Probability empirical_cvar_two_sided_bound(const MomentPrior& prior, double alpha,
                                                  std::size_t n) {
  return clamp_probability(empirical_cvar_dev_bound(prior, alpha, n, Side::Lower).raw +
                           empirical_cvar_dev_bound(prior, alpha, n, Side::Upper).raw);
}

/// Leading term beta x_m^a / (n^{a-1} (c + Delta)^a) of the lower bound on
/// P(c_hat >= c + Delta) for Pareto(x_m, a). The o(n^{1-a}) remainder is
/// dropped, so this is only asymptotically a lower bound.
inline Probability pareto_cvar_lower_bound(double xm, double a, double alpha, double Delta,
                                           std::size_t n) {
  if (!(a > 1.0) || !(xm > 0.0)) throw std::domain_error("pareto bound: need x_m > 0, a > 1");
  const double beta = detail::beta_of(alpha);
  const double c = a * xm * std::pow(beta, -1.0 / a) / (a - 1.0);
  return clamp_probability(beta * std::pow(xm, a) /
                           (std::pow(detail::dn(n), a - 1.0) * std::pow(c + Delta, a)));
}

// ---------------------------------------------------------------------------
// Truncated CVaR

/// 6 exp(-n beta Delta^2 / (176 b^2)).
inline Probability truncated_cvar_bound(double b, double alpha, std::size_t n, double Delta) {
  if (!(b > 0.0)) throw std::domain_error("truncated_cvar_bound: b must be positive");
  const double beta = detail::beta_of(alpha);
  return clamp_probability(6.0 * std::exp(-detail::dn(n) * beta * Delta * Delta / (176.0 * b * b)));
}

/// Smallest b for which truncated_cvar_bound holds (strict inequality):
/// max(|v_alpha|, (2B / (Delta beta))^{1/(p-1)}).
inline double truncated_cvar_validity(const MomentPrior& prior, double alpha,
                                      double var_magnitude) {
  prior.validate();
  const double beta = detail::beta_of(alpha);
  return std::max(var_magnitude,
                  std::pow(2.0 * prior.B / (prior.Delta * beta), 1.0 / (prior.p - 1.0)));
}

// ---------------------------------------------------------------------------
// Median of CVaRs

/// exp(-n / (8N)), valid once N >= N*.
inline Probability mob_cvar_bound(std::size_t n, std::size_t N) {
  if (N == 0 || N > n) throw std::domain_error("mob_cvar_bound: need 1 <= N <= n");
  return clamp_probability(std::exp(-detail::dn(n) / (8.0 * detail::dn(N))));
}

/// Minimal bin size N* for the median-of-CVaRs bound.
inline double mob_cvar_threshold(const MomentPrior& prior, double alpha) {
  prior.validate();
  const double beta = detail::beta_of(alpha);
  const double p = prior.p;
  const double B = prior.B;
  const double D = prior.Delta;
  const double ve = v_emp(prior, alpha);
  const double bp1 = std::pow(beta, p - 1.0);
  const double first =
      std::pow(4320.0 * ve / (bp1 * std::pow(D, p)) + 576.0 * ve * beta / (bp1 * B), 1.0 / (p - 1.0));
  const double inner = 8.0 * std::pow(B, 2.0 / p) / (D * D * std::pow(beta, 2.0 / p)) +
                       2.0 * std::pow(B, 1.0 / p) / (D * std::pow(beta, 1.0 / p));
  const double second = std::log(24.0) / beta * std::max(8.0, inner);
  return std::max(first, second);
}

// ---------------------------------------------------------------------------
// RA-GSR error bounds under the successive-rejects schedule

struct SrTruncationBound {
  Probability bound;
  double n_star;
  double min_T;  ///< K + K log_bar(K) n*; the bound holds for T > min_T
};

/// Error bound for SR with truncated estimators (b_m = n^{q_m}, b_c = n^{q_c}).
/// `gaps` holds Delta[2..K] sorted ascending. Terms whose weight xi is zero
/// are omitted.
inline SrTruncationBound sr_truncation_error_bound(std::span<const double> gaps,
                                                   const MomentPrior& prior, double alpha,
                                                   double xi1, double xi2, double q_m, double q_c,
                                                   std::size_t T, std::size_t K) {
  prior.validate();
  const double beta = detail::beta_of(alpha);
  if (K < 2 || gaps.size() != K - 1)
    throw std::invalid_argument("sr_truncation_error_bound: need K - 1 gaps");
  if (!std::is_sorted(gaps.begin(), gaps.end()))
    throw std::invalid_argument("sr_truncation_error_bound: gaps must be sorted ascending");
  if (!(gaps.front() > 0.0))
    throw std::invalid_argument("sr_truncation_error_bound: Delta[2] must be positive");
  if (T <= K) throw std::invalid_argument("sr_truncation_error_bound: need T > K");
  const double p = prior.p;
  const double B = prior.B;
  const double lb = log_bar(K);
  const double base = detail::dn(T - K) / lb;
  const double d2 = gaps.front();

  double sum = 0.0;
  for (std::size_t i = 2; i <= K; ++i) {
    const double w = detail::dn(K + 1 - i);
    const double di = gaps[i - 2];
    const double ii = detail::dn(i);
    if (xi1 != 0.0)
      sum += w * 2.0 *
             std::exp(-1.0 / (16.0 * xi1) * std::pow(base, 1.0 - q_m) * di / std::pow(ii, 1.0 - q_m));
    if (xi2 != 0.0)
      sum += w * 6.0 *
             std::exp(-beta / (2464.0 * xi2 * xi2) * std::pow(base, 1.0 - 2.0 * q_c) * di * di /
                      std::pow(ii, 1.0 - 2.0 * q_c));
  }

  double n_star = 0.0;
  if (xi1 != 0.0)
    n_star = std::max(n_star,
                      std::pow(12.0 * xi1 * B / d2, 1.0 / (q_m * std::min(p - 1.0, 1.0))));
  if (xi2 != 0.0) {
    n_star = std::max(n_star, std::pow(8.0 * xi2 * B / (beta * d2), 1.0 / (q_c * (p - 1.0))));
    n_star = std::max(n_star, std::pow(B / std::min(alpha, beta), 1.0 / (q_c * p)));
  }
  return {clamp_probability(sum), n_star, detail::dn(K) + detail::dn(K) * lb * n_star};
}

struct SrMobBound {
  Probability bound;
  double T_star;  ///< sufficient budget threshold
};

/// Error bound for SR with median-of-bins estimators (N_m = n^{q_m},
/// N_c = n^{q_c}) and the sufficient threshold T*.
inline SrMobBound sr_mob_error_bound(const MomentPrior& prior, double alpha, double xi1,
                                     double xi2, double q_m, double q_c, std::size_t T,
                                     std::size_t K, double Delta2) {
  prior.validate();
  const double beta = detail::beta_of(alpha);
  if (K < 2) throw std::invalid_argument("sr_mob_error_bound: need K >= 2");
  if (!(Delta2 > 0.0)) throw std::invalid_argument("sr_mob_error_bound: Delta[2] must be positive");
  if (T <= K) throw std::invalid_argument("sr_mob_error_bound: need T > K");
  const double p = prior.p;
  const double B = prior.B;
  const double lb = log_bar(K);

  double sum = 0.0;
  for (std::size_t k = 1; k < K; ++k) {
    const double x = detail::dn(T - K) / (lb * detail::dn(K + 1 - k));
    double term = 0.0;
    if (xi1 != 0.0) term += std::exp(-std::pow(x, 1.0 - q_m) / 8.0);
    if (xi2 != 0.0) term += std::exp(-std::pow(x, 1.0 - q_c) / 8.0);
    sum += detail::dn(k) * term;
  }

  double m = 0.0;
  if (xi1 != 0.0) m = std::max(m, std::pow(576.0 * xi1 * prior.V / Delta2, 1.0 / q_m));
  if (xi2 != 0.0) {
    const double ve = v_emp(prior, alpha);
    const double bp1 = std::pow(beta, p - 1.0);
    m = std::max(m, std::pow(8.0 * std::log(24.0) / beta, 1.0 / q_c));
    m = std::max(m, std::pow(4320.0 * std::pow(xi2, p) * std::pow(4.0, p) * ve /
                                     (bp1 * std::pow(Delta2, p)) +
                                 576.0 * ve * beta / (bp1 * B),
                             1.0 / (q_c * (p - 1.0))));
    const double inner = 128.0 * xi2 * xi2 * std::pow(B, 2.0 / p) /
                             (Delta2 * Delta2 * std::pow(beta, 2.0 / p)) +
                         8.0 * xi2 * std::pow(B, 1.0 / p) / (Delta2 * std::pow(beta, 1.0 / p));
    m = std::max(m, std::pow(8.0 * std::log(24.0) / beta * inner, 1.0 / q_c));
  }
  return {clamp_probability(sum), detail::dn(K) + detail::dn(K) * lb * m};
}

// ---------------------------------------------------------------------------
// Auxiliary constants and bounds

struct AuxBounds {
  MomentPrior prior;
  double alpha;
  double C_p;             ///< (3 sqrt 2)^p p^{p/2}
  double var_magnitude;   ///< bound on |v_alpha|: (B / min(alpha, beta))^{1/p}
  double cvar_magnitude;  ///< bound on c_alpha: (B / beta)^{1/p}

  /// P(|mu_hat - mu| > Delta) <= C_p V / (n^{p-1} Delta^p); n^{p/2} for p > 2.
  Probability empirical_mean_bound(std::size_t n, double Delta) const {
    const double p = prior.p;
    const double rate = p <= 2.0 ? p - 1.0 : p / 2.0;
    return clamp_probability(C_p * prior.V / (std::pow(detail::dn(n), rate) * std::pow(Delta, p)));
  }

  /// 2 exp(-n^{1-q} Delta / 4) for the truncated mean with b = n^q.
  Probability truncated_mean_bound(std::size_t n, double q, double Delta) const {
    return clamp_probability(2.0 * std::exp(-std::pow(detail::dn(n), 1.0 - q) * Delta / 4.0));
  }

  /// truncated_mean_bound holds for n above (3B/Delta)^{1/(q(p-1))}
  /// ((3B/Delta)^{1/q} for p > 2).
  double truncated_mean_validity(double q, double Delta) const {
    const double p = prior.p;
    const double expo = p <= 2.0 ? 1.0 / (q * (p - 1.0)) : 1.0 / q;
    return std::pow(3.0 * prior.B / Delta, expo);
  }

  /// 6 exp(-n beta (Delta / (b - a))^2 / 11) for support in [a, b].
  Probability bounded_cvar_bound(double a, double b, std::size_t n, double Delta) const {
    if (!(b > a)) throw std::domain_error("bounded_cvar_bound: need a < b");
    const double r = Delta / (b - a);
    return clamp_probability(6.0 * std::exp(-detail::dn(n) * (1.0 - alpha) * r * r / 11.0));
  }
};

inline AuxBounds aux_bounds(const MomentPrior& prior, double alpha) {
  const double beta = detail::beta_of(alpha);
  const double p = prior.p;
  if (!(p > 1.0)) throw std::domain_error("aux_bounds: p must exceed 1");
  const double C_p = std::pow(3.0 * std::numbers::sqrt2, p) * std::pow(p, p / 2.0);
  return {prior, alpha, C_p, std::pow(prior.B / std::min(alpha, beta), 1.0 / p),
          std::pow(prior.B / beta, 1.0 / p)};
}

// ---------------------------------------------------------------------------
// Prior-informed schedule offsets

/// (12 B xi1 / Delta)^{1/(p-1)}: mean truncation level from a moment prior.
inline double prior_mean_truncation_offset(const MomentPrior& prior, double xi1) {
  prior.validate();
  return std::pow(12.0 * prior.B * xi1 / prior.Delta, 1.0 / (prior.p - 1.0));
}

/// max((B/beta)^{1/p}, (8 B xi2 / (Delta beta))^{1/(p-1)}): CVaR truncation level.
inline double prior_cvar_truncation_offset(const MomentPrior& prior, double alpha, double xi2) {
  prior.validate();
  const double beta = detail::beta_of(alpha);
  return std::max(std::pow(prior.B / beta, 1.0 / prior.p),
                  std::pow(8.0 * prior.B * xi2 / (prior.Delta * beta), 1.0 / (prior.p - 1.0)));
}

/// 576 xi1 V / Delta: median-of-means bin size from a moment prior.
inline double prior_mean_bin_offset(const MomentPrior& prior, double xi1) {
  prior.validate();
  return 576.0 * xi1 * prior.V / prior.Delta;
}

/// N* evaluated at the per-arm deviation Delta / (4 xi2) that the SR analysis
/// needs for the CVaR part of the objective.
inline double prior_cvar_bin_offset(const MomentPrior& prior, double alpha, double xi2) {
  MomentPrior per_arm = prior;
  per_arm.Delta = prior.Delta / (4.0 * xi2);
  return mob_cvar_threshold(per_arm, alpha);
}

/// (4 B / (beta Delta))^{1/(p-1)}: the fixed CVaR truncation level of a
/// specialized algorithm that trusts its moment prior.
inline double specialized_cvar_truncation(const MomentPrior& prior, double alpha) {
  prior.validate();
  const double beta = detail::beta_of(alpha);
  return std::pow(4.0 * prior.B / (beta * prior.Delta), 1.0 / (prior.p - 1.0));
}

// ---------------------------------------------------------------------------
// Tail inflation

inline ArmDistribution perturb_distribution(const ArmDistribution& base, double cutoff,
                                            double index) {
  return ArmDistribution::tail_inflated(base, cutoff, index);
}

/// KL(G || F) = integral of g log(g / f), by adaptive quadrature on either
/// side of the cutoff.
inline double kl_to_base(const ArmDistribution& g) {
  const auto* t = std::get_if<dist::TailInflated>(&g.params());
  if (!t) throw std::invalid_argument("kl_to_base: distribution is not tail-inflated");
  const ArmDistribution& f = *t->base;
  auto integrand = [&](double x) {
    const double gx = g.density(x);
    const double fx = f.density(x);
    if (gx <= 0.0 || fx <= 0.0) return 0.0;
    return gx * std::log(gx / fx);
  };
  const double lo = f.support_min();
  const double body = integrate_kronrod(integrand, lo, t->cutoff);
  const double tail = integrate_half_line(integrand, t->cutoff);
  return body + tail;
}

/// b^{p - 1/2} (p - 1/2) log(b) (1 - F(b)).
inline double kl_proof_bound(const ArmDistribution& base, double cutoff, double index) {
  return std::pow(cutoff, index - 0.5) * (index - 0.5) * std::log(cutoff) * base.ccdf(cutoff);
}

}  // namespace riskbai
