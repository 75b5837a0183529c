#pragma once

// Monte Carlo engine: error-probability sweeps for RA-GSR, empirical checks of
// concentration bounds, and the catalog of built-in experiments.
//
// Seeds. Trial `t` of a sweep at budget T draws arm `i` from a stream seeded
// with derive_seed(master, {T, t, i}); batch `j` of a concentration check
// group (distribution d, size n) uses derive_seed(seed, {d, n, j}). Work is
// split across threads by index range and only integer counts are reduced,
// so results do not depend on the number of workers.

#include "riskbai/bandit.hpp"
#include "riskbai/bounds.hpp"
#include "riskbai/distributions.hpp"
#include "riskbai/estimators.hpp"
#include "riskbai/objective.hpp"
#include "riskbai/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

namespace riskbai {

// ---------------------------------------------------------------------------
// Confidence intervals

struct Interval {
  double low;
  double high;
};

/// Two-sided standard normal quantile for a confidence level (0.999 -> 3.2905).
inline double normal_z(double ci_level) {
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw std::domain_error("ci_level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal(0.0, 1.0), 1.0 - (1.0 - ci_level) / 2.0);
}

/// Wilson score interval for `successes` out of `trials`.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double ci_level) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: trials must be >= 1");
  if (successes > trials) throw std::invalid_argument("wilson_interval: successes > trials");
  const double z = normal_z(ci_level);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (successes == 0) ci.low = 0.0;
  if (successes == trials) ci.high = 1.0;
  ci.low = std::min(ci.low, p);
  ci.high = std::max(ci.high, p);
  return ci;
}

struct ErrorRateEstimate {
  std::size_t T = 0;
  std::uint64_t errors = 0;
  std::uint64_t trials = 0;
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

inline ErrorRateEstimate make_estimate(std::size_t T, std::uint64_t errors, std::uint64_t trials,
                                       double ci_level) {
  const Interval ci = wilson_interval(errors, trials, ci_level);
  return {T, errors, trials, static_cast<double>(errors) / static_cast<double>(trials), ci.low,
          ci.high};
}

/// True when the two intervals share at least one point.
inline bool overlaps(const ErrorRateEstimate& a, const ErrorRateEstimate& b) {
  return a.ci_low <= b.ci_high && b.ci_low <= a.ci_high;
}

// ---------------------------------------------------------------------------
// Parallel helpers

namespace detail {

inline std::size_t resolve_workers(std::size_t requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs body(begin, end, worker) on contiguous slices of [0, count).
/// Exceptions from workers are rethrown on the calling thread.
template <class Body>
void parallel_ranges(std::size_t count, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(resolve_workers(workers), count));
  if (workers == 1) {
    body(std::size_t{0}, count, std::size_t{0});
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    pool.emplace_back([&, begin, end, w] {
      try {
        body(begin, end, w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

/// Writes `contents` to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Error-probability sweeps

/// A labelled pair of estimator specs run as one RA-GSR variant.
struct Algorithm {
  std::string label;
  EstimatorSpec mean_spec = EstimatorSpec::mean(EstimatorKind::Empirical);
  EstimatorSpec cvar_spec = EstimatorSpec::cvar(EstimatorKind::Empirical, 0.95);

  /// Empirical, truncated or median-of-bins estimators for both targets with
  /// the same exponent q.
  static Algorithm family(EstimatorKind kind, double alpha, double q = 0.3) {
    return {kind_name(kind), EstimatorSpec::mean(kind, q), EstimatorSpec::cvar(kind, alpha, q)};
  }
};

struct ExperimentConfig {
  BanditInstance instance;
  ScheduleKind schedule = ScheduleKind::SuccessiveRejects;
  std::vector<Algorithm> algorithms;
  std::vector<std::size_t> budgets;
  std::uint64_t trials = 5000;
  std::uint64_t master_seed = kDefaultSeed;
  double ci_level = 0.999;
  std::size_t workers = 0;  ///< 0 = hardware concurrency

  void validate() const {
    instance.validate();
    if (!instance.identifiable())
      throw std::invalid_argument("experiment: instance '" + instance.name +
                                  "' has no unique optimal arm");
    if (algorithms.empty()) throw std::invalid_argument("experiment: no algorithms given");
    if (budgets.empty()) throw std::invalid_argument("experiment: no budgets given");
    if (!std::is_sorted(budgets.begin(), budgets.end()) ||
        std::adjacent_find(budgets.begin(), budgets.end()) != budgets.end())
      throw std::invalid_argument("experiment: budgets must be strictly ascending");
    if (trials == 0) throw std::invalid_argument("experiment: trials must be >= 1");
    if (!(ci_level > 0.0 && ci_level < 1.0))
      throw std::invalid_argument("experiment: ci_level must lie in (0, 1)");
    for (const auto& a : algorithms) detail::check_specs(instance.objective, a.mean_spec, a.cvar_spec);
  }
};

struct SweepRow {
  std::string instance;
  std::string schedule;
  std::string algorithm;
  std::optional<double> q_m;
  std::optional<double> q_c;
  ErrorRateEstimate estimate;
  std::string error;  ///< non-empty when T was infeasible for the schedule
};

namespace detail {

inline std::optional<double> reported_q(const EstimatorSpec& s) {
  if (s.kind == EstimatorKind::Empirical || s.basis == ScheduleBasis::Fixed) return std::nullopt;
  return s.q;
}

}  // namespace detail

/// Called after each budget completes with (index, count, T).
using SweepProgress = std::function<void(std::size_t, std::size_t, std::size_t)>;

/// Runs every algorithm for `trials` trials at every budget. Algorithms within
/// a trial share the same arm streams (common random numbers).
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                       const SweepProgress& progress = {}) {
  config.validate();
  const BanditInstance& inst = config.instance;
  const std::size_t K = inst.size();
  const std::size_t best = inst.optimal_arm();
  const std::size_t A = config.algorithms.size();
  std::vector<SweepRow> rows;

  for (std::size_t ti = 0; ti < config.budgets.size(); ++ti) {
    const std::size_t T = config.budgets[ti];
    auto row_for = [&](const Algorithm& a) {
      SweepRow r;
      r.instance = inst.name;
      r.schedule = schedule_name(config.schedule);
      r.algorithm = a.label;
      r.q_m = detail::reported_q(a.mean_spec);
      r.q_c = detail::reported_q(a.cvar_spec);
      r.estimate.T = T;
      r.estimate.trials = config.trials;
      return r;
    };
    PhaseSchedule schedule;
    try {
      schedule = make_schedule(config.schedule, K, T);
    } catch (const std::invalid_argument& e) {
      for (const auto& a : config.algorithms) {
        SweepRow r = row_for(a);
        r.error = e.what();
        rows.push_back(std::move(r));
      }
      if (progress) progress(ti, config.budgets.size(), T);
      continue;
    }

    const std::size_t workers = detail::resolve_workers(config.workers);
    std::vector<std::vector<std::uint64_t>> counts(workers, std::vector<std::uint64_t>(A, 0));
    detail::parallel_ranges(
        config.trials, workers, [&](std::size_t begin, std::size_t end, std::size_t w) {
          std::vector<std::uint64_t> seeds(K);
          for (std::size_t t = begin; t < end; ++t) {
            for (std::size_t i = 0; i < K; ++i) seeds[i] = derive_seed(config.master_seed, {T, t, i});
            ArmStreams streams(inst.arms, seeds);
            for (std::size_t a = 0; a < A; ++a) {
              const auto& alg = config.algorithms[a];
              const RunResult r =
                  run_ra_gsr(inst, schedule, alg.mean_spec, alg.cvar_spec, streams, false);
              if (r.selected != best) ++counts[w][a];
            }
          }
        });
    for (std::size_t a = 0; a < A; ++a) {
      std::uint64_t errors = 0;
      for (const auto& c : counts) errors += c[a];
      SweepRow r = row_for(config.algorithms[a]);
      r.estimate = make_estimate(T, errors, config.trials, config.ci_level);
      rows.push_back(std::move(r));
    }
    if (progress) progress(ti, config.budgets.size(), T);
  }
  return rows;
}

inline const char* kSweepCsvHeader = "instance,schedule,estimator,q_m,q_c,T,trials,errors,p_hat,ci_low,ci_high";

/// CSV text for the feasible rows, one per (algorithm, T), ordered by T then
/// algorithm.
inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  auto opt = [](const std::optional<double>& q) { return q ? detail::format_double(*q) : ""; };
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    const auto& e = r.estimate;
    os << r.instance << ',' << r.schedule << ',' << r.algorithm << ',' << opt(r.q_m) << ','
       << opt(r.q_c) << ',' << e.T << ',' << e.trials << ',' << e.errors << ','
       << detail::format_double(e.p_hat) << ',' << detail::format_double(e.ci_low) << ','
       << detail::format_double(e.ci_high) << '\n';
  }
  return os.str();
}

/// Rows of one algorithm in budget order.
inline std::vector<ErrorRateEstimate> curve(const std::vector<SweepRow>& rows,
                                            const std::string& algorithm) {
  std::vector<ErrorRateEstimate> out;
  for (const auto& r : rows)
    if (r.algorithm == algorithm && r.error.empty()) out.push_back(r.estimate);
  return out;
}

// ---------------------------------------------------------------------------
// Built-in experiments

struct NamedExperiment {
  std::string name;
  std::string description;
  ExperimentConfig config;
};

namespace detail {

inline std::vector<Algorithm> standard_algorithms(double alpha) {
  return {Algorithm::family(EstimatorKind::Empirical, alpha),
          Algorithm::family(EstimatorKind::Truncated, alpha),
          Algorithm::family(EstimatorKind::MedianOfBins, alpha)};
}

inline BanditInstance repeated(std::string name, ArmDistribution best, ArmDistribution other,
                               std::size_t others, RiskObjective obj) {
  BanditInstance inst{std::move(name), {best}, obj};
  for (std::size_t i = 0; i < others; ++i) inst.arms.push_back(other);
  return inst;
}

}  // namespace detail

/// Moment prior the specialized algorithms of the fragility experiment trust.
inline MomentPrior fragility_noisy_prior() { return {2.0, 0.05, 1.0, 0.6}; }
/// The prior the instance actually satisfies.
inline MomentPrior fragility_true_prior() { return {1.9, 0.057, 1.0, 0.45}; }

/// The seven built-in experiments. Arm 0 is optimal in every instance.
inline std::vector<NamedExperiment> builtin_experiments() {
  constexpr double alpha = 0.95;
  const RiskObjective mean_obj = RiskObjective::mean_only(alpha);
  const RiskObjective cvar_obj = RiskObjective::cvar_only(alpha);
  auto exp_cvar = [&](double c) { return solve_mean_for_cvar(Family::Exponential, 0.0, c, alpha); };
  auto lomax_cvar = [&](double shape, double c) {
    return solve_mean_for_cvar(Family::Lomax, shape, c, alpha);
  };

  std::vector<NamedExperiment> out;
  auto add = [&](std::string name, std::string description, BanditInstance inst,
                 std::vector<std::size_t> budgets, std::vector<Algorithm> algorithms) {
    ExperimentConfig cfg;
    inst.name = name;
    cfg.instance = std::move(inst);
    cfg.budgets = std::move(budgets);
    cfg.algorithms = std::move(algorithms);
    out.push_back({std::move(name), std::move(description), std::move(cfg)});
  };
  const auto standard = detail::standard_algorithms(alpha);

  add("exponential-mean", "10 exponential arms, means 0.97 (best) and 1.0; mean objective",
      detail::repeated("", ArmDistribution::exponential(0.97), ArmDistribution::exponential(1.0), 9,
                       mean_obj),
      {1000, 4000, 10000, 20000}, standard);
  add("exponential-cvar", "10 exponential arms, CVaR 2.85 (best) and 3.00; CVaR objective",
      detail::repeated("", exp_cvar(2.85), exp_cvar(3.00), 9, cvar_obj),
      {2000, 10000, 40000, 100000}, standard);
  add("lomax-mean", "10 Lomax arms with shape 1.8, means 0.9 (best) and 1.0; mean objective",
      detail::repeated("", ArmDistribution::lomax(0.9, 1.8), ArmDistribution::lomax(1.0, 1.8), 9,
                       mean_obj),
      {1000, 4000, 10000, 20000}, standard);
  add("lomax-cvar", "10 Lomax arms with shape 2, CVaR 2.55 (best) and 3.00; CVaR objective",
      detail::repeated("", lomax_cvar(2.0, 2.55), lomax_cvar(2.0, 3.00), 9, cvar_obj),
      {1000, 4000, 10000, 20000}, standard);

  {
    BanditInstance mixed{"", {exp_cvar(2.55)}, cvar_obj};
    for (int i = 0; i < 4; ++i) mixed.arms.push_back(exp_cvar(3.00));
    for (int i = 0; i < 5; ++i) mixed.arms.push_back(lomax_cvar(2.0, 3.00));
    auto fixed = [&](std::string label, double b, ScheduleBasis basis) {
      Algorithm a{std::move(label), EstimatorSpec::mean(EstimatorKind::Empirical),
                  EstimatorSpec::cvar(EstimatorKind::Truncated, alpha, 0.3)};
      a.cvar_spec.prior_offset = b;
      a.cvar_spec.basis = basis;
      return a;
    };
    const double b_true = specialized_cvar_truncation(fragility_true_prior(), alpha);
    const double b_noisy = specialized_cvar_truncation(fragility_noisy_prior(), alpha);
    add("mixed-cvar",
        "1 exponential arm with CVaR 2.55 (best), 4 exponential and 5 Lomax (shape 2) arms with "
        "CVaR 3.00; specialized fixed truncation from true and perturbed priors versus the "
        "perturbed level plus T^0.3",
        std::move(mixed), {1000, 4000, 10000, 20000},
        {fixed("specialized-true", b_true, ScheduleBasis::Fixed),
         fixed("specialized-noisy", b_noisy, ScheduleBasis::Fixed),
         fixed("robust", b_noisy, ScheduleBasis::Budget)});
  }

  add("combination-reward-seeking",
      "Lomax(mean 0.85, shape 2) best versus 9 Lomax(mean 1, shape 2.75); xi = (0.9, 0.1)",
      detail::repeated("", ArmDistribution::lomax(0.85, 2.0), ArmDistribution::lomax(1.0, 2.75), 9,
                       RiskObjective{alpha, 0.9, 0.1}),
      {1000, 4000, 10000, 20000}, standard);
  add("combination-risk-averse",
      "Lomax(shape 2.75, CVaR 2.55) best versus 9 Lomax(shape 2, CVaR 3); xi = (0.1, 0.9)",
      detail::repeated("", lomax_cvar(2.75, 2.55), lomax_cvar(2.0, 3.00), 9,
                       RiskObjective{alpha, 0.1, 0.9}),
      {1000, 4000, 10000, 20000}, standard);
  return out;
}

inline NamedExperiment builtin_experiment(const std::string& name) {
  for (auto& e : builtin_experiments())
    if (e.name == name) return e;
  std::string known;
  for (const auto& e : builtin_experiments()) known += (known.empty() ? "" : ", ") + e.name;
  throw std::invalid_argument("unknown instance '" + name + "' (known: " + known + ")");
}

// ---------------------------------------------------------------------------
// Concentration checks

enum class BoundKind {
  EmpiricalCvar,    ///< both sides of the empirical CVaR deviation bound, summed
  ParetoCvarLower,  ///< lower bound on the upward deviation of empirical CVaR (Pareto only)
  TruncatedCvar,    ///< truncated CVaR with a fixed level b
  MedianOfCvars,    ///< median of CVaRs with a fixed bin size N
  BoundedCvar,      ///< empirical CVaR of clipped samples versus the clipped CVaR
  EmpiricalMean,
  TruncatedMean,    ///< truncated mean with b = n^q
};

inline const char* bound_name(BoundKind k) {
  switch (k) {
    case BoundKind::EmpiricalCvar: return "empirical-cvar";
    case BoundKind::ParetoCvarLower: return "pareto-cvar-lower";
    case BoundKind::TruncatedCvar: return "truncated-cvar";
    case BoundKind::MedianOfCvars: return "median-of-cvars";
    case BoundKind::BoundedCvar: return "bounded-cvar";
    case BoundKind::EmpiricalMean: return "empirical-mean";
    case BoundKind::TruncatedMean: return "truncated-mean";
  }
  return "?";
}

/// One (distribution, estimator, n, Delta) point. `param` is the fixed
/// truncation level b (TruncatedCvar, BoundedCvar), the bin size N
/// (MedianOfCvars) or the exponent q (TruncatedMean); other kinds ignore it.
struct ConcentrationCheck {
  std::size_t dist;  ///< index into the distribution list
  BoundKind bound;
  std::size_t n;
  double Delta;
  double alpha = 0.95;
  double param = 0.0;
  MomentPrior prior{};  ///< (p, B, V) satisfied by the distribution; Delta is taken from above
};

struct ConcentrationResult {
  ConcentrationCheck check;
  std::uint64_t batches = 0;
  std::uint64_t deviations = 0;
  double frequency = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double reference = 0.0;  ///< the value the estimator is compared to
  Probability bound{0.0, 0.0};
  double threshold = 0.0;  ///< validity threshold of the bound (kind-specific)
  bool applicable = false;
  bool pass = false;
  std::string note;
};

namespace detail {

/// CVaR of min(max(X, lo), hi) by quadrature in quantile space.
inline double clipped_cvar(const ArmDistribution& d, double alpha, double lo, double hi) {
  const double beta = 1.0 - alpha;
  // Q(1 - s) >= hi for s below ccdf(hi), so that piece contributes hi per unit.
  const double s_hi = std::min(d.ccdf(hi), beta);
  std::vector<double> cuts{s_hi};
  for (double c : d.upper_quantile_breakpoints())
    if (c > s_hi && c < beta) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(beta);
  double total = hi * s_hi;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate_tanh_sinh(
        [&](double s) { return std::clamp(d.upper_quantile(s), lo, hi); }, cuts[i], cuts[i + 1]);
  return total / beta;
}

inline EstimatorSpec check_estimator(const ConcentrationCheck& c) {
  EstimatorSpec s;
  s.alpha = c.alpha;
  switch (c.bound) {
    case BoundKind::EmpiricalCvar:
    case BoundKind::ParetoCvarLower:
      s = EstimatorSpec::cvar(EstimatorKind::Empirical, c.alpha);
      break;
    case BoundKind::TruncatedCvar:
    case BoundKind::BoundedCvar:
      s = EstimatorSpec::cvar(EstimatorKind::Truncated, c.alpha);
      s.basis = ScheduleBasis::Fixed;
      s.prior_offset = c.param;
      break;
    case BoundKind::MedianOfCvars:
      s = EstimatorSpec::cvar(EstimatorKind::MedianOfBins, c.alpha);
      s.basis = ScheduleBasis::Fixed;
      s.prior_offset = c.param;
      break;
    case BoundKind::EmpiricalMean: s = EstimatorSpec::mean(EstimatorKind::Empirical); break;
    case BoundKind::TruncatedMean: s = EstimatorSpec::mean(EstimatorKind::Truncated, c.param); break;
  }
  return s;
}

/// Fills reference, bound, threshold and applicability.
inline void prepare_check(const ArmDistribution& d, ConcentrationResult& r) {
  const ConcentrationCheck& c = r.check;
  MomentPrior prior = c.prior;
  prior.Delta = c.Delta;
  const GroundTruth g = ground_truth(d, c.alpha);
  r.applicable = true;
  switch (c.bound) {
    case BoundKind::EmpiricalCvar:
      r.reference = g.cvar_alpha;
      r.bound = empirical_cvar_two_sided_bound(prior, c.alpha, c.n);
      break;
    case BoundKind::ParetoCvarLower: {
      const auto* p = std::get_if<dist::Pareto>(&d.params());
      if (!p) {
        r.applicable = false;
        r.note = "distribution is not Pareto";
        return;
      }
      r.reference = g.cvar_alpha;
      r.bound = pareto_cvar_lower_bound(p->scale, p->shape, c.alpha, c.Delta, c.n);
      break;
    }
    case BoundKind::TruncatedCvar:
      r.reference = g.cvar_alpha;
      r.threshold = truncated_cvar_validity(prior, c.alpha, std::abs(g.var_alpha));
      r.bound = truncated_cvar_bound(c.param, c.alpha, c.n, c.Delta);
      if (!(c.param > r.threshold)) {
        r.applicable = false;
        r.note = "b below validity threshold";
      }
      break;
    case BoundKind::MedianOfCvars: {
      r.reference = g.cvar_alpha;
      r.threshold = mob_cvar_threshold(prior, c.alpha);
      const auto N = static_cast<std::size_t>(c.param);
      if (N == 0 || N > c.n) {
        r.applicable = false;
        r.note = "bin size outside [1, n]";
        return;
      }
      r.bound = mob_cvar_bound(c.n, N);
      if (static_cast<double>(N) < r.threshold) {
        r.applicable = false;
        r.note = "bin size below N*";
      } else if (c.n % N != 0) {
        // exp(-k/8) <= exp(-n/(8N)) needs k = n/N bins exactly.
        r.applicable = false;
        r.note = "n is not a multiple of N";
      }
      break;
    }
    case BoundKind::BoundedCvar: {
      const double lo = std::max(-c.param, d.support_min());
      r.reference = clipped_cvar(d, c.alpha, -c.param, c.param);
      r.bound = aux_bounds(prior, c.alpha).bounded_cvar_bound(lo, c.param, c.n, c.Delta);
      break;
    }
    case BoundKind::EmpiricalMean:
      r.reference = g.mean;
      r.bound = aux_bounds(prior, c.alpha).empirical_mean_bound(c.n, c.Delta);
      break;
    case BoundKind::TruncatedMean: {
      r.reference = g.mean;
      const AuxBounds aux = aux_bounds(prior, c.alpha);
      r.threshold = aux.truncated_mean_validity(c.param, c.Delta);
      r.bound = aux.truncated_mean_bound(c.n, c.param, c.Delta);
      if (!(static_cast<double>(c.n) > r.threshold)) {
        r.applicable = false;
        r.note = "n below validity threshold";
      }
      break;
    }
  }
}

inline bool deviates(const ConcentrationCheck& c, double estimate, double reference) {
  if (c.bound == BoundKind::ParetoCvarLower) return estimate >= reference + c.Delta;
  return std::abs(estimate - reference) >= c.Delta;
}

}  // namespace detail

/// Monte Carlo deviation frequencies for a set of checks. Checks that share
/// (distribution, n) are evaluated on the same batches. Inapplicable checks
/// are reported without being simulated.
///
/// An upper bound passes when the Wilson upper end of the frequency is at most
/// the clamped bound; the Pareto lower bound passes when the Wilson lower end
/// is at least half the leading term.
inline std::vector<ConcentrationResult> validate_concentration(
    const std::vector<ArmDistribution>& dists, const std::vector<ConcentrationCheck>& checks,
    std::uint64_t batches, std::uint64_t seed, double ci_level = 0.999, std::size_t workers = 0) {
  if (batches == 0) throw std::invalid_argument("validate_concentration: batches must be >= 1");
  std::vector<ConcentrationResult> results(checks.size());
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    if (c.dist >= dists.size()) throw std::invalid_argument("validate_concentration: bad dist index");
    if (c.n == 0) throw std::invalid_argument("validate_concentration: n must be >= 1");
    results[i].check = c;
    detail::prepare_check(dists[c.dist], results[i]);
    if (results[i].applicable) groups[{c.dist, c.n}].push_back(i);
  }

  for (const auto& [key, members] : groups) {
    const auto [d, n] = key;
    std::vector<EstimatorSpec> specs;
    for (std::size_t i : members) specs.push_back(detail::check_estimator(checks[i]));
    const std::size_t W = detail::resolve_workers(workers);
    std::vector<std::vector<std::uint64_t>> counts(W, std::vector<std::uint64_t>(members.size(), 0));
    detail::parallel_ranges(batches, W, [&](std::size_t begin, std::size_t end, std::size_t w) {
      std::vector<double> xs(n);
      for (std::size_t j = begin; j < end; ++j) {
        Engine engine(derive_seed(seed, {d, n, j}));
        dists[d].sample_into(xs, engine);
        for (std::size_t m = 0; m < members.size(); ++m) {
          const double est = estimate(specs[m], xs, n);
          if (detail::deviates(checks[members[m]], est, results[members[m]].reference))
            ++counts[w][m];
        }
      }
    });
    for (std::size_t m = 0; m < members.size(); ++m) {
      ConcentrationResult& r = results[members[m]];
      for (const auto& c : counts) r.deviations += c[m];
      r.batches = batches;
      r.frequency = static_cast<double>(r.deviations) / static_cast<double>(batches);
      const Interval ci = wilson_interval(r.deviations, batches, ci_level);
      r.ci_low = ci.low;
      r.ci_high = ci.high;
      if (r.check.bound == BoundKind::ParetoCvarLower)
        r.pass = r.ci_low >= 0.5 * r.bound.value;
      else
        r.pass = r.ci_high <= r.bound.value;
    }
  }
  return results;
}

inline std::string concentration_csv(const std::vector<ConcentrationResult>& results) {
  std::ostringstream os;
  os << "dist,bound,n,Delta,alpha,param,batches,deviations,frequency,ci_low,ci_high,reference,"
        "bound_raw,bound_value,threshold,applicable,pass,note\n";
  using detail::format_double;
  for (const auto& r : results) {
    const auto& c = r.check;
    os << c.dist << ',' << bound_name(c.bound) << ',' << c.n << ',' << format_double(c.Delta)
       << ',' << format_double(c.alpha) << ',' << format_double(c.param) << ',' << r.batches
       << ',' << r.deviations << ',' << format_double(r.frequency) << ','
       << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ','
       << format_double(r.reference) << ',' << format_double(r.bound.raw) << ','
       << format_double(r.bound.value) << ',' << format_double(r.threshold) << ','
       << (r.applicable ? 1 : 0) << ',' << (r.applicable ? (r.pass ? 1 : 0) : 0) << ','
       << r.note << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Tail-inflation demo

struct LowerBoundDemoRow {
  double cutoff;
  bool admissible;
  double chi1;
  double kl;
  double kl_bound;
  double objective;
  std::string note;
};

/// For each cutoff b: the tail-inflated G, KL(G || F), the closed-form KL
/// bound and obj(G). Inadmissible cutoffs are flagged instead of thrown.
inline std::vector<LowerBoundDemoRow> demo_lower_bound(const ArmDistribution& base,
                                                       const std::vector<double>& cutoffs,
                                                       double index, const RiskObjective& obj) {
  obj.validate();
  std::vector<LowerBoundDemoRow> rows;
  for (double b : cutoffs) {
    LowerBoundDemoRow row{b, false, std::nan(""), std::nan(""), kl_proof_bound(base, b, index),
                          std::nan(""), ""};
    try {
      const ArmDistribution g = perturb_distribution(base, b, index);
      row.admissible = true;
      row.chi1 = std::get<dist::TailInflated>(g.params()).chi1;
      row.kl = kl_to_base(g);
      row.objective = objective_value(g, obj);
    } catch (const std::invalid_argument& e) {
      row.note = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string lower_bound_demo_csv(const std::vector<LowerBoundDemoRow>& rows) {
  std::ostringstream os;
  os << "b,admissible,chi1,kl,kl_bound,objective,note\n";
  using detail::format_double;
  for (const auto& r : rows) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    os << format_double(r.cutoff) << ',' << (r.admissible ? 1 : 0) << ','
       << (r.admissible ? format_double(r.chi1) : "") << ','
       << (r.admissible ? format_double(r.kl) : "") << ',' << format_double(r.kl_bound) << ','
       << (r.admissible ? format_double(r.objective) : "") << ',' << note << '\n';
  }
  return os.str();
}

}  // namespace riskbai
