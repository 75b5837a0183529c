#pragma once

// Point estimators of the mean and of CVaR from a batch of IID losses.
//
// Conventions shared by all CVaR estimators: beta = 1 - alpha, order
// statistics are decreasing (X[1] >= X[2] >= ... >= X[n]) and
//
//   c_hat = X[ceil(n beta)] + 1/(n beta) * sum_{i <= floor(n beta)} (X[i] - X[ceil(n beta)]).
//
// floor/ceil of n*beta use an absolute guard of 1e-9 so that an integral
// n*beta is not pushed across a boundary by rounding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskbai {

namespace detail {

inline void check_nonempty(std::span<const double> xs, const char* who) {
  if (xs.empty()) throw std::invalid_argument(std::string(who) + ": empty sample");
}

inline void check_alpha(double alpha, const char* who) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error(std::string(who) + ": alpha must lie in (0, 1)");
}

/// (floor(n beta), ceil(n beta)) with the 1e-9 guard; ceil is clamped to [1, n].
struct TailIndex {
  std::size_t floor_count;
  std::size_t ceil_count;
};

inline TailIndex tail_index(std::size_t n, double beta) {
  const double nb = static_cast<double>(n) * beta;
  auto fl = static_cast<std::size_t>(std::floor(nb + 1e-9));
  auto ce = static_cast<std::size_t>(std::ceil(nb - 1e-9));
  fl = std::min(fl, n);
  ce = std::clamp<std::size_t>(ce, 1, n);
  return {fl, ce};
}

/// Empirical CVaR of `work`, which is reordered in place.
inline double empirical_cvar_inplace(std::span<double> work, double alpha) {
  const std::size_t n = work.size();
  const double beta = 1.0 - alpha;
  const TailIndex t = tail_index(n, beta);
  // Partition the top block and sort it so the sum is taken in a fixed order;
  // the result is then independent of the input permutation.
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(t.ceil_count - 1),
                   work.end(), std::greater<>());
  std::sort(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(t.ceil_count - 1),
            std::greater<>());
  const double pivot = work[t.ceil_count - 1];
  double excess = 0.0;
  for (std::size_t i = 0; i < t.floor_count; ++i) excess += work[i] - pivot;
  return pivot + excess / (static_cast<double>(n) * beta);
}

inline std::vector<double>& scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

inline double lower_median(std::vector<double>& values) {
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  return values[mid];
}

inline std::size_t check_bins(std::size_t n, std::size_t bin_size, const char* who) {
  if (bin_size == 0) throw std::invalid_argument(std::string(who) + ": bin size must be >= 1");
  if (n < bin_size)
    throw std::invalid_argument(std::string(who) + ": fewer samples than one bin (n = " +
                                std::to_string(n) + ", N = " + std::to_string(bin_size) + ")");
  return n / bin_size;
}

}  // namespace detail

inline double empirical_mean(std::span<const double> xs) {
  detail::check_nonempty(xs, "empirical_mean");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double empirical_cvar(std::span<const double> xs, double alpha) {
  detail::check_nonempty(xs, "empirical_cvar");
  detail::check_alpha(alpha, "empirical_cvar");
  auto& work = detail::scratch();
  work.assign(xs.begin(), xs.end());
  return detail::empirical_cvar_inplace(work, alpha);
}

/// Empirical CVaR of the samples projected onto [-b, b].
inline double truncated_cvar(std::span<const double> xs, double alpha, double b) {
  detail::check_nonempty(xs, "truncated_cvar");
  detail::check_alpha(alpha, "truncated_cvar");
  if (!(b > 0.0)) throw std::invalid_argument("truncated_cvar: b must be positive");
  auto& work = detail::scratch();
  work.resize(xs.size());
  std::transform(xs.begin(), xs.end(), work.begin(),
                 [b](double x) { return std::clamp(x, -b, b); });
  return detail::empirical_cvar_inplace(work, alpha);
}

/// Mean with samples of magnitude above b replaced by zero (not clipped).
inline double truncated_mean(std::span<const double> xs, double b) {
  detail::check_nonempty(xs, "truncated_mean");
  if (!(b > 0.0)) throw std::invalid_argument("truncated_mean: b must be positive");
  double s = 0.0;
  for (double x : xs)
    if (std::abs(x) <= b) s += x;
  return s / static_cast<double>(xs.size());
}

/// Lower median of the means of floor(n/N) consecutive bins of size N.
inline double median_of_means(std::span<const double> xs, std::size_t bin_size) {
  const std::size_t k = detail::check_bins(xs.size(), bin_size, "median_of_means");
  std::vector<double> bins(k);
  for (std::size_t i = 0; i < k; ++i) bins[i] = empirical_mean(xs.subspan(i * bin_size, bin_size));
  return detail::lower_median(bins);
}

/// Lower median of the empirical CVaRs of floor(n/N) consecutive bins of size N.
inline double median_of_cvars(std::span<const double> xs, double alpha, std::size_t bin_size) {
  detail::check_alpha(alpha, "median_of_cvars");
  const std::size_t k = detail::check_bins(xs.size(), bin_size, "median_of_cvars");
  std::vector<double> bins(k);
  for (std::size_t i = 0; i < k; ++i)
    bins[i] = empirical_cvar(xs.subspan(i * bin_size, bin_size), alpha);
  return detail::lower_median(bins);
}

// ---------------------------------------------------------------------------
// Estimator specifications

enum class Target { Mean, CVaR };
enum class EstimatorKind { Empirical, Truncated, MedianOfBins };

/// What the growing term of a schedule is a power of.
enum class ScheduleBasis {
  Pulls,   ///< n^q, with n the per-arm sample count of the current phase
  Budget,  ///< T^q, with T the total budget of the run
  Fixed,   ///< no growing term; the offset alone
};

inline const char* kind_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Empirical: return "empirical";
    case EstimatorKind::Truncated: return "truncated";
    case EstimatorKind::MedianOfBins: return "median-of-bins";
  }
  return "?";
}

inline const char* basis_name(ScheduleBasis b) {
  switch (b) {
    case ScheduleBasis::Pulls: return "pulls";
    case ScheduleBasis::Budget: return "budget";
    case ScheduleBasis::Fixed: return "fixed";
  }
  return "?";
}

/// b(n) = prior_offset + n^q for truncation; N(n) = max(1, floor(prior_offset + n^q))
/// for median-of-bins. `basis` swaps n for the budget T, or drops the power term.
struct EstimatorSpec {
  Target target = Target::Mean;
  EstimatorKind kind = EstimatorKind::Empirical;
  double q = 0.3;
  double prior_offset = 0.0;
  double alpha = 0.95;
  ScheduleBasis basis = ScheduleBasis::Pulls;

  static EstimatorSpec mean(EstimatorKind kind, double q = 0.3) {
    return {Target::Mean, kind, q, 0.0, 0.95, ScheduleBasis::Pulls};
  }
  static EstimatorSpec cvar(EstimatorKind kind, double alpha, double q = 0.3) {
    return {Target::CVaR, kind, q, 0.0, alpha, ScheduleBasis::Pulls};
  }

  void validate() const {
    if (target == Target::CVaR) detail::check_alpha(alpha, "EstimatorSpec");
    if (kind == EstimatorKind::Empirical) return;
    if (!(prior_offset >= 0.0) || !std::isfinite(prior_offset))
      throw std::invalid_argument("EstimatorSpec: prior_offset must be >= 0");
    if (basis == ScheduleBasis::Fixed) {
      if (!(prior_offset > 0.0))
        throw std::invalid_argument("EstimatorSpec: fixed schedule needs a positive offset");
      return;
    }
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("EstimatorSpec: q must lie in (0, 1)");
    if (target == Target::CVaR && kind == EstimatorKind::Truncated && !(q < 0.5))
      throw std::invalid_argument("EstimatorSpec: truncated CVaR needs q in (0, 0.5)");
  }

  /// Value of offset + basis^q before any rounding.
  double schedule_value(std::size_t n, std::size_t budget = 0) const {
    switch (basis) {
      case ScheduleBasis::Pulls: return prior_offset + std::pow(static_cast<double>(n), q);
      case ScheduleBasis::Budget:
        if (budget == 0)
          throw std::invalid_argument("EstimatorSpec: budget-based schedule needs the budget T");
        return prior_offset + std::pow(static_cast<double>(budget), q);
      case ScheduleBasis::Fixed: return prior_offset;
    }
    return prior_offset;
  }

  double truncation_level(std::size_t n, std::size_t budget = 0) const {
    return schedule_value(n, budget);
  }

  std::size_t bin_size(std::size_t n, std::size_t budget = 0) const {
    const double v = std::floor(schedule_value(n, budget));
    return v < 1.0 ? 1 : static_cast<std::size_t>(v);
  }
};

/// Applies `spec` to the batch. `n` is the per-arm pull count that drives
/// the schedule and must equal the batch size; `budget` is only read by
/// budget-based schedules. Bin sizes larger than n are capped at n.
inline double estimate(const EstimatorSpec& spec, std::span<const double> xs, std::size_t n,
                       std::size_t budget = 0) {
  if (n != xs.size())
    throw std::invalid_argument("estimate: horizon hint n must equal the sample count");
  switch (spec.kind) {
    case EstimatorKind::Empirical:
      return spec.target == Target::Mean ? empirical_mean(xs) : empirical_cvar(xs, spec.alpha);
    case EstimatorKind::Truncated: {
      const double b = spec.truncation_level(n, budget);
      return spec.target == Target::Mean ? truncated_mean(xs, b)
                                         : truncated_cvar(xs, spec.alpha, b);
    }
    case EstimatorKind::MedianOfBins: {
      const std::size_t bin = std::min(spec.bin_size(n, budget), n);
      return spec.target == Target::Mean ? median_of_means(xs, bin)
                                         : median_of_cvars(xs, spec.alpha, bin);
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace riskbai
