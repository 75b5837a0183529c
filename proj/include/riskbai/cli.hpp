#pragma once

// The `riskbai` command-line front end. run_cli() is the whole program; the
// executable in tools/ only forwards argv to it.

#include "riskbai/bounds.hpp"
#include "riskbai/config.hpp"
#include "riskbai/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace riskbai {

inline constexpr std::uint64_t kPaperScaleTrials = 50000;

namespace detail {

struct RunExperimentArgs {
  std::string config;
  std::string instance;
  std::optional<std::uint64_t> trials;
  std::vector<std::size_t> budgets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out;
  std::string schedule;
  bool paper_scale = false;
  bool quiet = false;
};

inline int run_experiment(const RunExperimentArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg =
      a.config.empty() ? builtin_experiment(a.instance).config : load_experiment(a.config);
  if (a.paper_scale) cfg.trials = kPaperScaleTrials;
  if (a.trials) cfg.trials = *a.trials;
  if (!a.budgets.empty()) cfg.budgets = a.budgets;
  if (a.seed) cfg.master_seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  if (!a.schedule.empty()) cfg.schedule = parse_schedule_name(a.schedule);
  cfg.validate();

  auto progress = [&](std::size_t i, std::size_t count, std::size_t T) {
    if (!a.quiet) err << "[" << i + 1 << "/" << count << "] T=" << T << " done" << std::endl;
  };
  const std::vector<SweepRow> rows = run_sweep(cfg, progress);
  write_file_atomic(a.out, sweep_csv(rows));

  out << "instance " << cfg.instance.name << ", schedule " << schedule_name(cfg.schedule) << ", "
      << cfg.trials << " trials, seed " << cfg.master_seed << "\n";
  out << std::left << std::setw(20) << "estimator" << std::right << std::setw(8) << "T"
      << std::setw(10) << "errors" << std::setw(10) << "p_hat" << "  ci\n";
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      err << "warning: " << r.algorithm << " at T=" << r.estimate.T << " skipped: " << r.error
          << "\n";
      continue;
    }
    char line[160];
    std::snprintf(line, sizeof line, "%-20s%8zu%10llu%10.4f  [%.4f, %.4f]\n", r.algorithm.c_str(),
                  r.estimate.T, static_cast<unsigned long long>(r.estimate.errors),
                  r.estimate.p_hat, r.estimate.ci_low, r.estimate.ci_high);
    out << line;
  }
  out << "wrote " << a.out << "\n";
  return 0;
}

struct ValidateArgs {
  std::string dist;
  std::string bound;
  std::vector<std::size_t> n;
  double delta = 0.0;
  double alpha = 0.95;
  double param = 0.0;
  double p = 2.0;
  std::optional<double> B;
  std::optional<double> V;
  std::uint64_t batches = 100000;
  std::uint64_t seed = kDefaultSeed;
  std::size_t workers = 0;
  double ci_level = 0.999;
  std::string out;
};

inline BoundKind parse_bound_kind(const std::string& s) {
  for (BoundKind k : {BoundKind::EmpiricalCvar, BoundKind::ParetoCvarLower, BoundKind::TruncatedCvar,
                      BoundKind::MedianOfCvars, BoundKind::BoundedCvar, BoundKind::EmpiricalMean,
                      BoundKind::TruncatedMean})
    if (s == bound_name(k)) return k;
  throw config_error("unknown bound '" + s + "'");
}

inline int validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const ArmDistribution d = parse_distribution(a.dist, a.alpha);
  const BoundKind kind = parse_bound_kind(a.bound);
  MomentPrior prior{a.p, 0.0, 0.0, a.delta};
  // The Pareto lower bound does not use (B, V).
  if ((!a.B || !a.V) && kind != BoundKind::ParetoCvarLower) {
    MomentPrior oracle;
    try {
      oracle = moment_prior_of(d, a.p, a.delta);
    } catch (const std::exception&) {
      oracle.B = oracle.V = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(oracle.B) || !std::isfinite(oracle.V))
      throw std::invalid_argument("--p: the p-th moment of " + d.describe() +
                                  " is not finite; pass a smaller --p or explicit --B/--V");
    prior.B = oracle.B;
    prior.V = oracle.V;
  }
  if (a.B) prior.B = *a.B;
  if (a.V) prior.V = *a.V;
  std::vector<ConcentrationCheck> checks;
  for (std::size_t n : a.n) checks.push_back({0, kind, n, a.delta, a.alpha, a.param, prior});
  const auto results = validate_concentration({d}, checks, a.batches, a.seed, a.ci_level, a.workers);
  const std::string csv = concentration_csv(results);
  if (a.out.empty()) {
    out << csv;
  } else {
    write_file_atomic(a.out, csv);
    out << d.describe() << ", " << a.bound << ", Delta " << a.delta << ", p " << prior.p << ", B "
        << prior.B << ", V " << prior.V << "\n";
    for (const auto& r : results) {
      out << "n=" << r.check.n << " ";
      if (!r.applicable) {
        out << "not applicable (" << r.note << ")\n";
        continue;
      }
      out << "frequency " << r.frequency << " [" << r.ci_low << ", " << r.ci_high << "] bound "
          << r.bound.value << (r.pass ? " pass" : " FAIL") << "\n";
    }
    out << "wrote " << a.out << "\n";
  }
  (void)err;
  return 0;
}

struct BoundsArgs {
  double p = 2.0;
  double B = 1.0;
  double V = 1.0;
  double delta = 1.0;
  double alpha = 0.95;
  std::size_t n = 1000;
  std::optional<double> b;
  std::optional<std::size_t> N;
  double q = 0.3;
  double q_m = 0.3;
  double q_c = 0.3;
  double xi1 = 1.0;
  double xi2 = 0.0;
  std::optional<std::size_t> T;
  std::size_t K = 10;
  std::vector<double> gaps;
  std::optional<double> support_low;
  std::optional<double> pareto_scale;
  std::optional<double> pareto_shape;
};

inline int compute_bounds(const BoundsArgs& a, std::ostream& out) {
  const MomentPrior prior{a.p, a.B, a.V, a.delta};
  prior.validate();
  const AuxBounds aux = aux_bounds(prior, a.alpha);
  std::ostringstream os;
  auto row = [&](const std::string& name, double value, std::optional<double> threshold = {}) {
    os << name << ',' << detail::format_double(value) << ','
       << (threshold ? detail::format_double(*threshold) : "") << '\n';
  };
  os << "name,value,threshold\n";
  row("v_emp", v_emp(prior, a.alpha));
  row("C_p", aux.C_p);
  row("var_magnitude", aux.var_magnitude);
  row("cvar_magnitude", aux.cvar_magnitude);
  row("empirical_cvar_lower", empirical_cvar_dev_bound(prior, a.alpha, a.n, Side::Lower).value);
  row("empirical_cvar_upper", empirical_cvar_dev_bound(prior, a.alpha, a.n, Side::Upper).value);
  row("empirical_mean", aux.empirical_mean_bound(a.n, a.delta).value);
  row("truncated_mean", aux.truncated_mean_bound(a.n, a.q, a.delta).value,
      aux.truncated_mean_validity(a.q, a.delta));
  const double b_min = truncated_cvar_validity(prior, a.alpha, aux.var_magnitude);
  row("truncated_cvar", truncated_cvar_bound(a.b.value_or(b_min), a.alpha, a.n, a.delta).value, b_min);
  const double n_star = mob_cvar_threshold(prior, a.alpha);
  if (a.N) row("median_of_cvars", mob_cvar_bound(a.n, *a.N).value, n_star);
  else row("median_of_cvars_threshold", n_star);
  if (a.b) {
    const double lo = a.support_low.value_or(-*a.b);
    row("bounded_cvar", aux.bounded_cvar_bound(lo, *a.b, a.n, a.delta).value);
  }
  if (a.pareto_scale && a.pareto_shape)
    row("pareto_cvar_lower", pareto_cvar_lower_bound(*a.pareto_scale, *a.pareto_shape, a.alpha,
                                                     a.delta, a.n).value);
  if (a.T) {
    std::vector<double> gaps = a.gaps;
    if (gaps.empty()) gaps.assign(a.K - 1, a.delta);
    std::sort(gaps.begin(), gaps.end());
    const auto tr = sr_truncation_error_bound(gaps, prior, a.alpha, a.xi1, a.xi2, a.q_m, a.q_c,
                                              *a.T, a.K);
    row("sr_truncation_error", tr.bound.value, tr.min_T);
    row("sr_truncation_n_star", tr.n_star);
    const auto mob =
        sr_mob_error_bound(prior, a.alpha, a.xi1, a.xi2, a.q_m, a.q_c, *a.T, a.K, gaps.front());
    row("sr_mob_error", mob.bound.value, mob.T_star);
  }
  if (a.xi1 > 0.0) {
    row("prior_mean_truncation", prior_mean_truncation_offset(prior, a.xi1));
    row("prior_mean_bins", prior_mean_bin_offset(prior, a.xi1));
  }
  if (a.xi2 > 0.0) {
    row("prior_cvar_truncation", prior_cvar_truncation_offset(prior, a.alpha, a.xi2));
    row("prior_cvar_bins", prior_cvar_bin_offset(prior, a.alpha, a.xi2));
  }
  row("specialized_cvar_truncation", specialized_cvar_truncation(prior, a.alpha));
  out << os.str();
  return 0;
}

struct DemoArgs {
  std::string base = "{kind: pareto, scale: 1, shape: 1.5}";
  std::vector<double> cutoffs{10.0, 100.0, 1000.0};
  double index = 1.5;
  double alpha = 0.95;
  double xi1 = 1.0;
  double xi2 = 0.0;
  std::string out;
};

inline int demo(const DemoArgs& a, std::ostream& out) {
  const ArmDistribution base = parse_distribution(a.base, a.alpha);
  const auto rows = demo_lower_bound(base, a.cutoffs, a.index, RiskObjective{a.alpha, a.xi1, a.xi2});
  const std::string csv = lower_bound_demo_csv(rows);
  if (a.out.empty()) {
    out << csv;
  } else {
    write_file_atomic(a.out, csv);
    out << "base " << base.describe() << ", objective of base "
        << objective_value(base, RiskObjective{a.alpha, a.xi1, a.xi2}) << "\nwrote " << a.out
        << "\n";
  }
  return 0;
}

inline int list_instances(std::ostream& out) {
  for (const auto& e : builtin_experiments()) {
    const auto& inst = e.config.instance;
    const auto gaps = inst.gaps();
    out << e.name << "\n  " << e.description << "\n  K=" << inst.size()
        << " alpha=" << inst.objective.alpha << " xi1=" << inst.objective.xi1
        << " xi2=" << inst.objective.xi2 << " best objective=" << inst.objectives()[inst.optimal_arm()]
        << " Delta[2]=" << gaps.front() << "\n  budgets=";
    for (std::size_t i = 0; i < e.config.budgets.size(); ++i)
      out << (i ? "," : "") << e.config.budgets[i];
    out << " algorithms=";
    for (std::size_t i = 0; i < e.config.algorithms.size(); ++i)
      out << (i ? "," : "") << e.config.algorithms[i].label;
    out << "\n";
    for (std::size_t i = 0; i < inst.size(); ++i) {
      if (i > 0 && inst.arms[i].describe() == inst.arms[i - 1].describe()) continue;
      std::size_t run = 1;
      while (i + run < inst.size() && inst.arms[i + run].describe() == inst.arms[i].describe()) ++run;
      out << "    " << run << " x " << inst.arms[i].describe() << "\n";
    }
  }
  return 0;
}

}  // namespace detail

/// Parses `args` (without the program name) and runs the chosen subcommand.
/// Returns the process exit code: 0 on success, 2 for usage or config
/// errors, 1 for anything else.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Risk-aware best-arm identification: experiments, bound checks and demos",
               "riskbai"};
  app.require_subcommand(1, 1);
  app.allow_extras(false);

  detail::RunExperimentArgs run;
  auto* run_cmd = app.add_subcommand("run-experiment", "Monte Carlo error-probability sweep");
  auto* cfg_opt = run_cmd->add_option("--config", run.config, "YAML experiment config");
  auto* inst_opt = run_cmd->add_option("--instance", run.instance, "built-in instance name");
  cfg_opt->excludes(inst_opt);
  run_cmd->add_option("--trials", run.trials, "trials per budget");
  run_cmd->add_option("--budgets", run.budgets, "comma-separated budgets T")->delimiter(',');
  run_cmd->add_option("--seed", run.seed, "master seed (default 20210917)");
  run_cmd->add_option("--workers", run.workers, "worker threads (0 = all cores)");
  run_cmd->add_option("--out", run.out, "output CSV path")->required();
  run_cmd->add_option("--schedule", run.schedule, "phase schedule: sr, halving or uniform");
  auto* paper_opt = run_cmd->add_flag("--paper-scale", run.paper_scale, "use 50000 trials");
  paper_opt->excludes("--trials");
  run_cmd->add_flag("--quiet", run.quiet, "no per-budget progress on stderr");

  detail::ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate-concentration",
                                     "Monte Carlo deviation frequencies versus a bound");
  val_cmd->add_option("--dist", val.dist, "distribution, e.g. \"{kind: exponential, mean: 1}\"")
      ->required();
  val_cmd
      ->add_option("--bound", val.bound,
                   "empirical-cvar, pareto-cvar-lower, truncated-cvar, median-of-cvars, "
                   "bounded-cvar, empirical-mean or truncated-mean")
      ->required();
  val_cmd->add_option("--n", val.n, "comma-separated batch sizes")->delimiter(',')->required();
  val_cmd->add_option("--delta", val.delta, "deviation Delta")->required();
  val_cmd->add_option("--alpha", val.alpha, "CVaR level");
  val_cmd->add_option("--param", val.param, "truncation level b, bin size N or exponent q");
  val_cmd->add_option("--p", val.p, "moment index p");
  val_cmd->add_option("--B", val.B, "bound on E|X|^p (default: computed)");
  val_cmd->add_option("--V", val.V, "bound on E|X-EX|^p (default: computed)");
  val_cmd->add_option("--batches", val.batches, "batches per point");
  val_cmd->add_option("--seed", val.seed, "seed");
  val_cmd->add_option("--workers", val.workers, "worker threads (0 = all cores)");
  val_cmd->add_option("--ci-level", val.ci_level, "confidence level of frequency intervals");
  val_cmd->add_option("--out", val.out, "output CSV path (default: stdout)");

  detail::BoundsArgs bnd;
  auto* bnd_cmd = app.add_subcommand("compute-bounds", "Evaluate closed-form bounds as CSV");
  bnd_cmd->add_option("--p", bnd.p, "moment index p in (1, 2]");
  bnd_cmd->add_option("--B", bnd.B, "bound on E|X|^p");
  bnd_cmd->add_option("--V", bnd.V, "bound on E|X-EX|^p");
  bnd_cmd->add_option("--delta", bnd.delta, "deviation or gap Delta");
  bnd_cmd->add_option("--alpha", bnd.alpha, "CVaR level");
  bnd_cmd->add_option("--n", bnd.n, "sample size");
  bnd_cmd->add_option("--b", bnd.b, "truncation level / upper support end");
  bnd_cmd->add_option("--a", bnd.support_low, "lower support end for the bounded-CVaR bound");
  bnd_cmd->add_option("--N", bnd.N, "bin size");
  bnd_cmd->add_option("--q", bnd.q, "truncated-mean exponent");
  bnd_cmd->add_option("--q-m", bnd.q_m, "mean schedule exponent");
  bnd_cmd->add_option("--q-c", bnd.q_c, "CVaR schedule exponent");
  bnd_cmd->add_option("--xi1", bnd.xi1, "mean weight");
  bnd_cmd->add_option("--xi2", bnd.xi2, "CVaR weight");
  bnd_cmd->add_option("--T", bnd.T, "budget (enables the RA-GSR bounds)");
  bnd_cmd->add_option("--K", bnd.K, "number of arms");
  bnd_cmd->add_option("--gaps", bnd.gaps, "comma-separated gaps Delta[2..K]")->delimiter(',');
  bnd_cmd->add_option("--pareto-scale", bnd.pareto_scale, "Pareto x_m for the lower bound");
  bnd_cmd->add_option("--pareto-shape", bnd.pareto_shape, "Pareto a for the lower bound");

  detail::DemoArgs dem;
  auto* dem_cmd =
      app.add_subcommand("demo-lower-bound", "Tail inflation: KL to the base and objective");
  dem_cmd->add_option("--base", dem.base, "base distribution (exponential, lomax or pareto)");
  dem_cmd->add_option("--b", dem.cutoffs, "comma-separated cutoffs")->delimiter(',');
  dem_cmd->add_option("--index", dem.index, "tail index p > 1");
  dem_cmd->add_option("--alpha", dem.alpha, "CVaR level");
  dem_cmd->add_option("--xi1", dem.xi1, "mean weight");
  dem_cmd->add_option("--xi2", dem.xi2, "CVaR weight");
  dem_cmd->add_option("--out", dem.out, "output CSV path (default: stdout)");

  auto* list_cmd = app.add_subcommand("list-instances", "Show the built-in instances");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      if (run.config.empty() && run.instance.empty()) {
        err << "run-experiment: give --config or --instance\n";
        return 2;
      }
      return detail::run_experiment(run, out, err);
    }
    if (val_cmd->parsed()) return detail::validate(val, out, err);
    if (bnd_cmd->parsed()) return detail::compute_bounds(bnd, out);
    if (dem_cmd->parsed()) return detail::demo(dem, out);
    if (list_cmd->parsed()) return detail::list_instances(out);
  } catch (const config_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace riskbai
