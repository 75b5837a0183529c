#pragma once

// Risk-aware generalized successive rejects (RA-GSR) and its phase schedules.
//
// A run has K-1 phases. In phase k every surviving arm is topped up to n_k
// pulls, the estimated objective xi1 * mean_hat + xi2 * cvar_hat is
// recomputed from all n_k samples of each survivor, and the survivor with the
// largest estimate is rejected. Ties reject the largest arm index.

#include "riskbai/distributions.hpp"
#include "riskbai/estimators.hpp"
#include "riskbai/objective.hpp"
#include "riskbai/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskbai {

// ---------------------------------------------------------------------------
// Phase schedules

struct PhaseSchedule {
  std::vector<std::size_t> pulls;  ///< n_1 <= ... <= n_{K-1}
  std::size_t budget = 0;          ///< T the schedule was sized for (0 if unknown)

  std::size_t arms() const { return pulls.size() + 1; }

  /// sum_{k<K-1} n_k + 2 n_{K-1}, which is exactly the number of pulls a run makes.
  std::size_t total_pulls() const {
    if (pulls.empty()) return 0;
    return std::accumulate(pulls.begin(), pulls.end(), std::size_t{0}) + pulls.back();
  }

  void validate(std::size_t K) const {
    if (K < 2) throw std::invalid_argument("schedule: need at least two arms");
    if (pulls.size() != K - 1) {
      std::ostringstream msg;
      msg << "schedule: expected " << K - 1 << " phases for " << K << " arms, got "
          << pulls.size();
      throw std::invalid_argument(msg.str());
    }
    for (std::size_t i = 0; i < pulls.size(); ++i) {
      if (pulls[i] == 0) throw std::invalid_argument("schedule: pull counts must be positive");
      if (i > 0 && pulls[i] < pulls[i - 1])
        throw std::invalid_argument("schedule: pull counts must be nondecreasing");
    }
    if (budget != 0 && total_pulls() > budget) {
      std::ostringstream msg;
      msg << "schedule: uses " << total_pulls() << " pulls, budget is " << budget;
      throw std::invalid_argument(msg.str());
    }
  }
};

enum class ScheduleKind { SuccessiveRejects, Halving, Uniform };

inline const char* schedule_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::SuccessiveRejects: return "sr";
    case ScheduleKind::Halving: return "halving";
    case ScheduleKind::Uniform: return "uniform";
  }
  return "?";
}

/// 1/2 + sum_{i=2}^K 1/i.
inline double log_bar(std::size_t K) {
  double s = 0.5;
  for (std::size_t i = 2; i <= K; ++i) s += 1.0 / static_cast<double>(i);
  return s;
}

/// n_k = ceil((T - K) / (log_bar(K) (K + 1 - k))).
inline PhaseSchedule sr_schedule(std::size_t K, std::size_t T) {
  if (K < 2) throw std::invalid_argument("sr_schedule: need at least two arms");
  if (T <= K) {
    std::ostringstream msg;
    msg << "sr_schedule: budget T = " << T << " must exceed K = " << K;
    throw std::invalid_argument(msg.str());
  }
  const double lb = log_bar(K);
  PhaseSchedule s{{}, T};
  s.pulls.reserve(K - 1);
  for (std::size_t k = 1; k < K; ++k) {
    const double raw = static_cast<double>(T - K) / (lb * static_cast<double>(K + 1 - k));
    s.pulls.push_back(static_cast<std::size_t>(std::ceil(raw - 1e-9)));
  }
  s.validate(K);
  return s;
}

/// Sequential halving: ceil(log2 K) rounds, each giving every survivor
/// floor(T / (|S_r| R)) further pulls and rejecting floor(|S_r| / 2) arms.
inline PhaseSchedule halving_schedule(std::size_t K, std::size_t T) {
  if (K < 2) throw std::invalid_argument("halving_schedule: need at least two arms");
  std::size_t rounds = 0;
  while ((std::size_t{1} << rounds) < K) ++rounds;
  PhaseSchedule s{{}, T};
  std::size_t survivors = K;
  std::size_t cumulative = 0;
  for (std::size_t r = 0; r < rounds && survivors > 1; ++r) {
    const std::size_t extra = T / (survivors * rounds);
    if (extra == 0) {
      std::ostringstream msg;
      msg << "halving_schedule: budget T = " << T << " leaves round " << r + 1
          << " with no pulls (" << survivors << " arms, " << rounds << " rounds)";
      throw std::invalid_argument(msg.str());
    }
    cumulative += extra;
    const std::size_t rejected = survivors / 2;
    for (std::size_t j = 0; j < rejected; ++j) s.pulls.push_back(cumulative);
    survivors -= rejected;
  }
  s.validate(K);
  return s;
}

/// Every n_k = floor(T / K).
inline PhaseSchedule uniform_schedule(std::size_t K, std::size_t T) {
  if (K < 2) throw std::invalid_argument("uniform_schedule: need at least two arms");
  if (T < K) {
    std::ostringstream msg;
    msg << "uniform_schedule: budget T = " << T << " is below K = " << K;
    throw std::invalid_argument(msg.str());
  }
  PhaseSchedule s{std::vector<std::size_t>(K - 1, T / K), T};
  s.validate(K);
  return s;
}

inline PhaseSchedule make_schedule(ScheduleKind kind, std::size_t K, std::size_t T) {
  switch (kind) {
    case ScheduleKind::SuccessiveRejects: return sr_schedule(K, T);
    case ScheduleKind::Halving: return halving_schedule(K, T);
    case ScheduleKind::Uniform: return uniform_schedule(K, T);
  }
  throw std::invalid_argument("unknown schedule kind");
}

// ---------------------------------------------------------------------------
// Instances

struct BanditInstance {
  std::string name;
  std::vector<ArmDistribution> arms;
  RiskObjective objective;

  std::size_t size() const { return arms.size(); }

  std::vector<double> objectives() const {
    std::vector<double> out;
    out.reserve(arms.size());
    for (const auto& a : arms) out.push_back(objective_value(a, objective));
    return out;
  }

  /// Index of the smallest ground-truth objective (first one on ties).
  std::size_t optimal_arm() const {
    const auto obj = objectives();
    return static_cast<std::size_t>(std::min_element(obj.begin(), obj.end()) - obj.begin());
  }

  /// Gaps obj[i] - obj[best] of the suboptimal arms, sorted ascending
  /// (Delta[2] <= ... <= Delta[K]).
  std::vector<double> gaps() const {
    auto obj = objectives();
    std::sort(obj.begin(), obj.end());
    std::vector<double> out;
    for (std::size_t i = 1; i < obj.size(); ++i) out.push_back(obj[i] - obj[0]);
    return out;
  }

  /// False when two arms tie for the best objective (relative 1e-12).
  bool identifiable() const {
    const auto g = gaps();
    if (g.empty()) return false;
    const auto obj = objectives();
    const double best = *std::min_element(obj.begin(), obj.end());
    return g.front() > 1e-12 * std::max(1.0, std::abs(best));
  }

  void validate() const {
    if (arms.size() < 2) throw std::invalid_argument("instance: need at least two arms");
    objective.validate();
  }
};

// ---------------------------------------------------------------------------
// Sample streams

/// One lazily extended sample stream per arm. A prefix of a stream depends
/// only on that arm's seed, so several algorithms can share the same streams
/// (common random numbers) without affecting each other's draws.
class ArmStreams {
 public:
  ArmStreams(const std::vector<ArmDistribution>& arms, std::vector<std::uint64_t> seeds)
      : arms_(&arms), samples_(arms.size()) {
    if (seeds.size() != arms.size())
      throw std::invalid_argument("ArmStreams: one seed per arm required");
    engines_.reserve(seeds.size());
    for (auto s : seeds) engines_.emplace_back(s);
  }

  /// Streams seeded with derive_seed(seed, {arm}).
  static ArmStreams from_seed(const std::vector<ArmDistribution>& arms, std::uint64_t seed) {
    std::vector<std::uint64_t> seeds(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i) seeds[i] = derive_seed(seed, {i});
    return ArmStreams(arms, std::move(seeds));
  }

  /// The first n samples of arm i, drawing more if needed.
  std::span<const double> prefix(std::size_t arm, std::size_t n) {
    auto& buf = samples_.at(arm);
    if (buf.size() < n) {
      const std::size_t old = buf.size();
      buf.resize(n);
      (*arms_)[arm].sample_into(std::span<double>(buf).subspan(old), engines_[arm]);
    }
    return std::span<const double>(buf).first(n);
  }

  std::size_t drawn(std::size_t arm) const { return samples_.at(arm).size(); }

 private:
  const std::vector<ArmDistribution>* arms_;
  std::vector<Engine> engines_;
  std::vector<std::vector<double>> samples_;
};

// ---------------------------------------------------------------------------
// RA-GSR

struct PhaseRecord {
  std::size_t phase;  ///< 1-based
  std::size_t pulls;  ///< n_k
  std::vector<std::size_t> survivors;
  std::vector<double> mean_estimates;  ///< NaN when xi1 = 0
  std::vector<double> cvar_estimates;  ///< NaN when xi2 = 0
  std::vector<double> objective_estimates;
  std::size_t rejected;
};

struct RunResult {
  std::size_t selected = 0;
  std::size_t total_pulls = 0;
  std::size_t mean_estimator_calls = 0;
  std::size_t cvar_estimator_calls = 0;
  std::vector<std::size_t> rejections;
  std::vector<PhaseRecord> audit;  ///< empty unless requested
};

/// One line per phase: phase, n_k, survivors, estimates and rejected arm.
inline std::string format_audit(const RunResult& r) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& p : r.audit) {
    os << "phase=" << p.phase << " n=" << p.pulls << " survivors=";
    for (std::size_t i = 0; i < p.survivors.size(); ++i) os << (i ? "," : "") << p.survivors[i];
    os << " objective=";
    for (std::size_t i = 0; i < p.objective_estimates.size(); ++i)
      os << (i ? "," : "") << p.objective_estimates[i];
    os << " rejected=" << p.rejected << '\n';
  }
  os << "selected=" << r.selected << " pulls=" << r.total_pulls << '\n';
  return os.str();
}

namespace detail {

inline void check_specs(const RiskObjective& obj, const EstimatorSpec& mean_spec,
                        const EstimatorSpec& cvar_spec) {
  if (mean_spec.target != Target::Mean)
    throw std::invalid_argument("run_ra_gsr: mean estimator spec must target the mean");
  if (cvar_spec.target != Target::CVaR)
    throw std::invalid_argument("run_ra_gsr: CVaR estimator spec must target CVaR");
  if (obj.xi2 != 0.0 && std::abs(cvar_spec.alpha - obj.alpha) > 1e-12)
    throw std::invalid_argument("run_ra_gsr: CVaR estimator alpha differs from the objective");
  mean_spec.validate();
  cvar_spec.validate();
}

}  // namespace detail

inline RunResult run_ra_gsr(const BanditInstance& instance, const PhaseSchedule& schedule,
                            const EstimatorSpec& mean_spec, const EstimatorSpec& cvar_spec,
                            ArmStreams& streams, bool record_audit = false) {
  const std::size_t K = instance.size();
  schedule.validate(K);
  const RiskObjective& obj = instance.objective;
  detail::check_specs(obj, mean_spec, cvar_spec);
  const bool use_mean = obj.xi1 != 0.0;
  const bool use_cvar = obj.xi2 != 0.0;

  RunResult result;
  result.rejections.reserve(K - 1);
  std::vector<std::size_t> survivors(K);
  std::iota(survivors.begin(), survivors.end(), std::size_t{0});
  std::vector<double> means(K), cvars(K), objs(K);
  std::size_t previous = 0;

  for (std::size_t k = 0; k + 1 < K; ++k) {
    const std::size_t n = schedule.pulls[k];
    result.total_pulls += survivors.size() * (n - previous);
    previous = n;
    std::size_t worst = 0;
    for (std::size_t j = 0; j < survivors.size(); ++j) {
      const auto xs = streams.prefix(survivors[j], n);
      double m = std::numeric_limits<double>::quiet_NaN();
      double c = std::numeric_limits<double>::quiet_NaN();
      if (use_mean) {
        m = estimate(mean_spec, xs, n, schedule.budget);
        ++result.mean_estimator_calls;
      }
      if (use_cvar) {
        c = estimate(cvar_spec, xs, n, schedule.budget);
        ++result.cvar_estimator_calls;
      }
      means[j] = m;
      cvars[j] = c;
      objs[j] = obj.combine(m, c);
      if (std::isnan(objs[j])) throw std::logic_error("run_ra_gsr: NaN objective estimate");
      // Survivors are kept in increasing index order, so >= prefers the larger index.
      if (objs[j] >= objs[worst]) worst = j;
    }
    const std::size_t rejected = survivors[worst];
    if (record_audit) {
      const std::size_t m = survivors.size();
      result.audit.push_back({k + 1, n, survivors, std::vector<double>(means.begin(), means.begin() + m),
                              std::vector<double>(cvars.begin(), cvars.begin() + m),
                              std::vector<double>(objs.begin(), objs.begin() + m), rejected});
    }
    result.rejections.push_back(rejected);
    survivors.erase(survivors.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  result.selected = survivors.front();
  return result;
}

/// Self-contained run with per-arm streams seeded by derive_seed(seed, {arm}).
inline RunResult run_ra_gsr(const BanditInstance& instance, const PhaseSchedule& schedule,
                            const EstimatorSpec& mean_spec, const EstimatorSpec& cvar_spec,
                            std::uint64_t seed, bool record_audit = true) {
  ArmStreams streams = ArmStreams::from_seed(instance.arms, seed);
  return run_ra_gsr(instance, schedule, mean_spec, cvar_spec, streams, record_audit);
}

}  // namespace riskbai
