#pragma once

// YAML experiment and distribution configs (requires yaml-cpp).
//
// A distribution is a map with a `kind` and named parameters:
//
//   {kind: exponential, mean: 1.0}          {kind: exponential, cvar: 2.85}
//   {kind: lomax, mean: 1.0, shape: 1.8}    {kind: lomax, cvar: 3.0, shape: 2}
//   {kind: pareto, scale: 1, shape: 1.5}    {kind: gaussian, mean: 0, sd: 1}
//   {kind: constant, value: 5}
//   {kind: tail-inflated, base: {...}, cutoff: 100, index: 1.5}
//   {kind: scaled, base: {...}, factor: 2}
//
// `cvar:` solves for the mean (scale for Pareto) that gives that CVaR at the
// instance's alpha. In an instance, an arm entry may carry `count: k`.
//
// An experiment file:
//
//   instance:            # or `builtin: lomax-cvar` to start from a catalog entry
//     name: demo
//     alpha: 0.95
//     xi1: 0
//     xi2: 1
//     arms:
//       - {kind: exponential, cvar: 2.85}
//       - {kind: exponential, cvar: 3.00, count: 9}
//   schedule: sr         # sr | halving | uniform
//   algorithms:          # names of estimator families, or full maps
//     - empirical
//     - {label: trunc, mean: {kind: truncated, q: 0.3}, cvar: {kind: truncated, q: 0.3}}
//   budgets: [1000, 4000]
//   trials: 5000
//   seed: 20210917
//   ci_level: 0.999
//
// Errors are reported as config_error with "line:column" of the offending node.

#include "riskbai/bandit.hpp"
#include "riskbai/distributions.hpp"
#include "riskbai/estimators.hpp"
#include "riskbai/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace riskbai {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string where(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return "";
  return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ": ";
}

[[noreturn]] inline void fail(const YAML::Node& node, const std::string& what) {
  throw config_error(where(node) + what);
}

inline void require_map(const YAML::Node& node, const std::string& what) {
  if (!node || !node.IsMap()) fail(node, what + " must be a mapping");
}

inline void allow_keys(const YAML::Node& node, std::initializer_list<const char*> keys,
                       const std::string& what) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) fail(kv.first, "unknown field '" + key + "' in " + what);
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field) {
  if (!node.IsScalar()) fail(node, "field '" + field + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, "field '" + field + "' has an invalid value '" + node.Scalar() + "'");
  }
}

inline double number(const YAML::Node& parent, const char* field) {
  const YAML::Node n = parent[field];
  if (!n) fail(parent, std::string("missing field '") + field + "'");
  return scalar<double>(n, field);
}

inline double number_or(const YAML::Node& parent, const char* field, double fallback) {
  const YAML::Node n = parent[field];
  return n ? scalar<double>(n, field) : fallback;
}

/// Runs `make` and rethrows std::invalid_argument as config_error at the
/// node of the field named in the message (or the map itself).
template <class Make>
auto with_location(const YAML::Node& node, Make&& make) -> decltype(make()) {
  try {
    return make();
  } catch (const config_error&) {
    throw;
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (msg.find(" " + key + " ") != std::string::npos ||
          msg.find(": " + key + " ") != std::string::npos)
        fail(kv.second, "field '" + key + "': " + msg);
    }
    fail(node, msg);
  }
}

}  // namespace detail

inline ArmDistribution parse_distribution(const YAML::Node& node, double alpha = 0.95);

namespace detail {

inline ArmDistribution parse_distribution_impl(const YAML::Node& node, double alpha,
                                               bool allow_count) {
  require_map(node, "distribution");
  const YAML::Node kind_node = node["kind"];
  if (!kind_node) fail(node, "missing field 'kind'");
  const auto kind = scalar<std::string>(kind_node, "kind");
  auto keys = [&](std::initializer_list<const char*> extra) {
    std::vector<const char*> all{"kind"};
    if (allow_count) all.push_back("count");
    all.insert(all.end(), extra.begin(), extra.end());
    const std::set<std::string> allowed(all.begin(), all.end());
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, "unknown field '" + key + "' for kind " + kind);
    }
  };
  auto mean_or_cvar = [&](Family fam, double other) {
    const bool has_mean = static_cast<bool>(node["mean"]);
    const bool has_cvar = static_cast<bool>(node["cvar"]);
    if (has_mean == has_cvar) fail(node, "exactly one of 'mean' or 'cvar' is required for " + kind);
    if (has_cvar) {
      const double c = number(node, "cvar");
      return with_location(node, [&] { return solve_mean_for_cvar(fam, other, c, alpha); });
    }
    const double m = number(node, "mean");
    return with_location(node, [&] {
      switch (fam) {
        case Family::Exponential: return ArmDistribution::exponential(m);
        case Family::Lomax: return ArmDistribution::lomax(m, other);
        default: return ArmDistribution::gaussian(m, other);
      }
    });
  };

  if (kind == "exponential") {
    keys({"mean", "cvar"});
    return mean_or_cvar(Family::Exponential, 0.0);
  }
  if (kind == "lomax") {
    keys({"mean", "cvar", "shape"});
    const double shape = number(node, "shape");
    if (!(shape > 1.0)) fail(node["shape"], "field 'shape': must be > 1 (got " + node["shape"].Scalar() + ")");
    return mean_or_cvar(Family::Lomax, shape);
  }
  if (kind == "gaussian") {
    keys({"mean", "cvar", "sd"});
    const double sd = number(node, "sd");
    if (!(sd > 0.0)) fail(node["sd"], "field 'sd': must be positive (got " + node["sd"].Scalar() + ")");
    return mean_or_cvar(Family::Gaussian, sd);
  }
  if (kind == "pareto") {
    keys({"scale", "cvar", "shape"});
    const double shape = number(node, "shape");
    if (!(shape > 1.0)) fail(node["shape"], "field 'shape': must be > 1 (got " + node["shape"].Scalar() + ")");
    if (node["cvar"]) {
      if (node["scale"]) fail(node, "give either 'scale' or 'cvar' for pareto, not both");
      const double c = number(node, "cvar");
      return with_location(node, [&] { return solve_mean_for_cvar(Family::Pareto, shape, c, alpha); });
    }
    const double scale = number(node, "scale");
    return with_location(node, [&] { return ArmDistribution::pareto(scale, shape); });
  }
  if (kind == "constant") {
    keys({"value"});
    const double v = number(node, "value");
    return with_location(node, [&] { return ArmDistribution::constant(v); });
  }
  if (kind == "tail-inflated") {
    keys({"base", "cutoff", "index"});
    if (!node["base"]) fail(node, "missing field 'base'");
    const ArmDistribution base = parse_distribution_impl(node["base"], alpha, false);
    const double b = number(node, "cutoff");
    const double p = number(node, "index");
    return with_location(node, [&] { return ArmDistribution::tail_inflated(base, b, p); });
  }
  if (kind == "scaled") {
    keys({"base", "factor"});
    if (!node["base"]) fail(node, "missing field 'base'");
    const ArmDistribution base = parse_distribution_impl(node["base"], alpha, false);
    const double f = number(node, "factor");
    return with_location(node, [&] { return ArmDistribution::scaled(base, f); });
  }
  fail(kind_node, "unknown distribution kind '" + kind +
                      "' (expected exponential, lomax, pareto, gaussian, constant, "
                      "tail-inflated or scaled)");
}

}  // namespace detail

inline ArmDistribution parse_distribution(const YAML::Node& node, double alpha) {
  return detail::parse_distribution_impl(node, alpha, false);
}

/// Parses a one-line flow map such as "{kind: lomax, mean: 1, shape: 1.8}".
inline ArmDistribution parse_distribution(const std::string& text, double alpha = 0.95) {
  YAML::Node node;
  try {
    node = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw config_error("distribution spec: " + std::string(e.what()));
  }
  return parse_distribution(node, alpha);
}

/// The config form of `d`, a YAML flow map that parse_distribution reads back.
inline std::string to_config(const ArmDistribution& d) {
  std::ostringstream os;
  os.precision(17);
  std::visit(detail::overloaded{
                 [&](const dist::Exponential& p) { os << "{kind: exponential, mean: " << p.mean << "}"; },
                 [&](const dist::Lomax& p) {
                   os << "{kind: lomax, mean: " << p.mean << ", shape: " << p.shape << "}";
                 },
                 [&](const dist::Pareto& p) {
                   os << "{kind: pareto, scale: " << p.scale << ", shape: " << p.shape << "}";
                 },
                 [&](const dist::Gaussian& p) {
                   os << "{kind: gaussian, mean: " << p.mean << ", sd: " << p.sd << "}";
                 },
                 [&](const dist::Constant& p) { os << "{kind: constant, value: " << p.value << "}"; },
                 [&](const dist::TailInflated& p) {
                   os << "{kind: tail-inflated, base: " << to_config(*p.base)
                      << ", cutoff: " << p.cutoff << ", index: " << p.index << "}";
                 },
                 [&](const dist::Scaled& p) {
                   os << "{kind: scaled, base: " << to_config(*p.base) << ", factor: " << p.factor
                      << "}";
                 },
             },
             d.params());
  return os.str();
}

namespace detail {

inline EstimatorKind parse_kind(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "kind");
  if (s == "empirical") return EstimatorKind::Empirical;
  if (s == "truncated") return EstimatorKind::Truncated;
  if (s == "median-of-bins") return EstimatorKind::MedianOfBins;
  fail(node, "unknown estimator kind '" + s + "' (expected empirical, truncated or median-of-bins)");
}

inline EstimatorSpec parse_estimator(const YAML::Node& node, Target target, double alpha) {
  require_map(node, "estimator");
  allow_keys(node, {"kind", "q", "offset", "basis"}, "estimator");
  if (!node["kind"]) fail(node, "missing field 'kind'");
  EstimatorSpec s;
  s.target = target;
  s.alpha = alpha;
  s.kind = parse_kind(node["kind"]);
  s.q = number_or(node, "q", 0.3);
  s.prior_offset = number_or(node, "offset", 0.0);
  if (const YAML::Node b = node["basis"]) {
    const auto v = scalar<std::string>(b, "basis");
    if (v == "pulls") s.basis = ScheduleBasis::Pulls;
    else if (v == "budget") s.basis = ScheduleBasis::Budget;
    else if (v == "fixed") s.basis = ScheduleBasis::Fixed;
    else fail(b, "unknown basis '" + v + "' (expected pulls, budget or fixed)");
  }
  with_location(node, [&] {
    s.validate();
    return 0;
  });
  return s;
}

inline Algorithm parse_algorithm(const YAML::Node& node, double alpha) {
  if (node.IsScalar()) {
    const EstimatorKind k = parse_kind(node);
    return Algorithm::family(k, alpha);
  }
  require_map(node, "algorithm");
  allow_keys(node, {"label", "mean", "cvar"}, "algorithm");
  Algorithm a;
  if (!node["label"]) fail(node, "missing field 'label'");
  a.label = scalar<std::string>(node["label"], "label");
  if (a.label.empty() || a.label.find(',') != std::string::npos)
    fail(node["label"], "field 'label' must be non-empty and free of commas");
  a.mean_spec = node["mean"] ? parse_estimator(node["mean"], Target::Mean, alpha)
                             : EstimatorSpec::mean(EstimatorKind::Empirical);
  a.cvar_spec = node["cvar"] ? parse_estimator(node["cvar"], Target::CVaR, alpha)
                             : EstimatorSpec::cvar(EstimatorKind::Empirical, alpha);
  return a;
}

inline BanditInstance parse_instance(const YAML::Node& node) {
  require_map(node, "instance");
  allow_keys(node, {"name", "alpha", "xi1", "xi2", "arms"}, "instance");
  BanditInstance inst;
  inst.name = node["name"] ? scalar<std::string>(node["name"], "name") : "custom";
  if (inst.name.empty() || inst.name.find(',') != std::string::npos)
    fail(node["name"], "field 'name' must be non-empty and free of commas");
  inst.objective.alpha = number_or(node, "alpha", 0.95);
  inst.objective.xi1 = number_or(node, "xi1", 1.0);
  inst.objective.xi2 = number_or(node, "xi2", 0.0);
  with_location(node, [&] {
    inst.objective.validate();
    return 0;
  });
  const YAML::Node arms = node["arms"];
  if (!arms || !arms.IsSequence()) fail(node, "field 'arms' must be a sequence");
  for (const auto& arm : arms) {
    const ArmDistribution d = parse_distribution_impl(arm, inst.objective.alpha, true);
    std::int64_t count = 1;
    if (const YAML::Node c = arm["count"]) {
      count = scalar<std::int64_t>(c, "count");
      if (count < 1) fail(c, "field 'count' must be >= 1");
    }
    for (std::int64_t i = 0; i < count; ++i) inst.arms.push_back(d);
  }
  if (inst.arms.size() < 2) fail(arms, "an instance needs at least two arms");
  if (!inst.identifiable()) fail(arms, "instance has no unique optimal arm (zero gap)");
  return inst;
}

inline ScheduleKind parse_schedule(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "schedule");
  if (s == "sr") return ScheduleKind::SuccessiveRejects;
  if (s == "halving") return ScheduleKind::Halving;
  if (s == "uniform") return ScheduleKind::Uniform;
  fail(node, "unknown schedule '" + s + "' (expected sr, halving or uniform)");
}

}  // namespace detail

/// Parses schedule names as used on the command line.
inline ScheduleKind parse_schedule_name(const std::string& s) {
  return detail::parse_schedule(YAML::Node(s));
}

/// Builds an ExperimentConfig from a parsed YAML document.
inline ExperimentConfig parse_experiment(const YAML::Node& root) {
  using namespace detail;
  require_map(root, "experiment config");
  allow_keys(root,
             {"builtin", "instance", "schedule", "algorithms", "budgets", "trials", "seed",
              "ci_level", "workers"},
             "experiment config");
  ExperimentConfig cfg;
  if (root["builtin"] && root["instance"]) fail(root, "give either 'builtin' or 'instance', not both");
  if (const YAML::Node b = root["builtin"]) {
    const auto name = scalar<std::string>(b, "builtin");
    try {
      cfg = builtin_experiment(name).config;
    } catch (const std::invalid_argument& e) {
      fail(b, e.what());
    }
  } else if (const YAML::Node inst = root["instance"]) {
    cfg.instance = parse_instance(inst);
    cfg.algorithms = {};
    cfg.budgets = {};
  } else {
    fail(root, "missing field 'instance' (or 'builtin')");
  }
  const double alpha = cfg.instance.objective.alpha;
  if (const YAML::Node s = root["schedule"]) cfg.schedule = parse_schedule(s);
  if (const YAML::Node algs = root["algorithms"]) {
    if (!algs.IsSequence() || algs.size() == 0) fail(algs, "field 'algorithms' must be a non-empty sequence");
    cfg.algorithms.clear();
    std::set<std::string> labels;
    for (const auto& a : algs) {
      Algorithm alg = parse_algorithm(a, alpha);
      if (!labels.insert(alg.label).second) fail(a, "duplicate algorithm label '" + alg.label + "'");
      cfg.algorithms.push_back(std::move(alg));
    }
  }
  if (cfg.algorithms.empty()) cfg.algorithms = detail::standard_algorithms(alpha);
  if (const YAML::Node b = root["budgets"]) {
    if (!b.IsSequence() || b.size() == 0) fail(b, "field 'budgets' must be a non-empty sequence");
    cfg.budgets.clear();
    for (const auto& t : b) {
      const auto v = scalar<std::int64_t>(t, "budgets");
      if (v < 2) fail(t, "budgets must be >= 2");
      if (!cfg.budgets.empty() && static_cast<std::size_t>(v) <= cfg.budgets.back())
        fail(t, "budgets must be strictly ascending");
      cfg.budgets.push_back(static_cast<std::size_t>(v));
    }
  }
  if (cfg.budgets.empty()) fail(root, "missing field 'budgets'");
  if (const YAML::Node t = root["trials"]) {
    const auto v = scalar<std::int64_t>(t, "trials");
    if (v < 1) fail(t, "field 'trials' must be >= 1");
    cfg.trials = static_cast<std::uint64_t>(v);
  }
  if (const YAML::Node s = root["seed"]) cfg.master_seed = scalar<std::uint64_t>(s, "seed");
  if (const YAML::Node c = root["ci_level"]) {
    cfg.ci_level = scalar<double>(c, "ci_level");
    if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) fail(c, "field 'ci_level' must lie in (0, 1)");
  }
  if (const YAML::Node w = root["workers"]) {
    const auto v = scalar<std::int64_t>(w, "workers");
    if (v < 0) fail(w, "field 'workers' must be >= 0");
    cfg.workers = static_cast<std::size_t>(v);
  }
  return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw config_error(path + ": cannot open file");
  } catch (const YAML::Exception& e) {
    throw config_error(path + ": " + e.what());
  }
  try {
    return parse_experiment(root);
  } catch (const config_error& e) {
    throw config_error(path + ": " + e.what());
  }
}

}  // namespace riskbai
