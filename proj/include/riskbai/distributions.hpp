#pragma once

// Parametric loss distributions used as bandit arms.
//
// Every family exposes its CDF, survival function, quantile and a
// cancellation-free upper quantile (the x with P(X > x) = s). Sampling is by
// inversion of the upper quantile, so a draw is a deterministic function of one
// uniform variate and the whole stream is reproducible from a seed.

#include "riskbai/quadrature.hpp"
#include "riskbai/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace riskbai {

class ArmDistribution;

enum class Family { Exponential, Lomax, Pareto, Gaussian, Constant, TailInflated, Scaled };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Exponential: return "exponential";
    case Family::Lomax: return "lomax";
    case Family::Pareto: return "pareto";
    case Family::Gaussian: return "gaussian";
    case Family::Constant: return "constant";
    case Family::TailInflated: return "tail-inflated";
    case Family::Scaled: return "scaled";
  }
  return "?";
}

namespace dist {

struct Exponential {
  double mean;
};

/// CDF 1 - (1 + x / (mean (shape - 1)))^{-shape} for x > 0.
struct Lomax {
  double mean;
  double shape;
  double scale() const { return mean * (shape - 1.0); }
};

/// P(X > x) = (scale / x)^shape for x > scale.
struct Pareto {
  double scale;
  double shape;
};

struct Gaussian {
  double mean;
  double sd;
};

struct Constant {
  double value;
};

/// Base F reweighted at a cutoff b:
///   G(x) = chi1 F(x)                for x <  b
///   1 - G(x) = b^{index - 1/2} (1 - F(x))  for x >= b
/// with chi1 = (1 - b^{index - 1/2} (1 - F(b))) / F(b) so that G is continuous.
struct TailInflated {
  std::shared_ptr<const ArmDistribution> base;
  double cutoff;
  double index;
  double chi1;
  double tail_weight;  // b^{index - 1/2}
  double tail_mass;    // tail_weight * (1 - F(b)) = P_G(X >= b)
};

/// factor * X for X ~ base.
struct Scaled {
  std::shared_ptr<const ArmDistribution> base;
  double factor;
};

}  // namespace dist

/// Immutable value type; copies share any nested base distribution.
class ArmDistribution {
 public:
  using Params = std::variant<dist::Exponential, dist::Lomax, dist::Pareto, dist::Gaussian,
                              dist::Constant, dist::TailInflated, dist::Scaled>;

  static ArmDistribution exponential(double mean) {
    require(std::isfinite(mean) && mean > 0, "exponential", "mean", "must be positive", mean);
    return ArmDistribution(dist::Exponential{mean});
  }

  static ArmDistribution lomax(double mean, double shape) {
    require(std::isfinite(mean) && mean > 0, "lomax", "mean", "must be positive", mean);
    require(std::isfinite(shape) && shape > 1, "lomax", "shape", "must be > 1", shape);
    return ArmDistribution(dist::Lomax{mean, shape});
  }

  static ArmDistribution pareto(double scale, double shape) {
    require(std::isfinite(scale) && scale > 0, "pareto", "scale", "must be positive", scale);
    require(std::isfinite(shape) && shape > 1, "pareto", "shape", "must be > 1", shape);
    return ArmDistribution(dist::Pareto{scale, shape});
  }

  static ArmDistribution gaussian(double mean, double sd) {
    require(std::isfinite(mean), "gaussian", "mean", "must be finite", mean);
    require(std::isfinite(sd) && sd > 0, "gaussian", "sd", "must be positive", sd);
    return ArmDistribution(dist::Gaussian{mean, sd});
  }

  static ArmDistribution constant(double value) {
    require(std::isfinite(value), "constant", "value", "must be finite", value);
    return ArmDistribution(dist::Constant{value});
  }

  /// Throws std::invalid_argument if chi1 falls outside (0, 1); the message
  /// carries the smallest admissible cutoff.
  static ArmDistribution tail_inflated(const ArmDistribution& base, double cutoff, double index);

  static ArmDistribution scaled(const ArmDistribution& base, double factor) {
    require(std::isfinite(factor) && factor > 0, "scaled", "factor", "must be positive", factor);
    return ArmDistribution(
        dist::Scaled{std::make_shared<const ArmDistribution>(base), factor});
  }

  Family family() const { return static_cast<Family>(params_.index()); }
  const Params& params() const { return params_; }

  std::string describe() const;

  double cdf(double x) const;
  double ccdf(double x) const;
  /// Lebesgue density; Constant has none and throws std::logic_error.
  double density(double x) const;
  /// inf{x : F(x) >= u} for u in (0, 1).
  double quantile(double u) const;
  /// The x with P(X > x) = s, computed without forming 1 - s.
  double upper_quantile(double s) const;
  double support_min() const;

  /// True for families whose quantile is available in closed form.
  bool has_closed_form_quantile() const {
    const Family f = family();
    return f == Family::Exponential || f == Family::Lomax || f == Family::Pareto;
  }

  double draw(Engine& engine) const { return upper_quantile(uniform_open01(engine)); }

  /// Fills `out` with IID draws; the variant is dispatched once per call.
  void sample_into(std::span<double> out, Engine& engine) const;

  std::vector<double> sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
    std::vector<double> out(n);
    Engine engine(seed);
    sample_into(out, engine);
    return out;
  }

  /// Survival-probability values where upper_quantile has a kink; used to
  /// split tail integrals.
  std::vector<double> upper_quantile_breakpoints() const;

 private:
  explicit ArmDistribution(Params p) : params_(std::move(p)) {}

  static void require(bool ok, const char* kind, const char* field, const char* what,
                      double got) {
    if (ok) return;
    std::ostringstream msg;
    msg << kind << ": " << field << " " << what << " (got " << got << ")";
    throw std::invalid_argument(msg.str());
  }

  Params params_;
};

// ---------------------------------------------------------------------------

namespace detail {

inline const boost::math::normal& standard_normal() {
  static const boost::math::normal n(0.0, 1.0);
  return n;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline double tail_admissible_chi1(const ArmDistribution& base, double b, double index,
                                   double* tail_weight, double* tail_mass) {
  const double w = std::pow(b, index - 0.5);
  const double fb = base.cdf(b);
  const double mass = w * base.ccdf(b);
  if (tail_weight) *tail_weight = w;
  if (tail_mass) *tail_mass = mass;
  if (!(fb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (1.0 - mass) / fb;
}

inline bool tail_admissible(const ArmDistribution& base, double b, double index) {
  const double chi1 = tail_admissible_chi1(base, b, index, nullptr, nullptr);
  return std::isfinite(chi1) && chi1 > 0.0 && chi1 < 1.0;
}

}  // namespace detail

/// Smallest cutoff b for which the tail-inflation of `base` is admissible,
/// found by a geometric scan upward from 1e-6 and refined by bisection.
/// Returns +inf if nothing below 1e12 is admissible. For light-tailed bases
/// chi1 rounds to 1 once F(b) is within an ulp of 1, so the admissible range
/// is bounded above as well.
inline double min_admissible_cutoff(const ArmDistribution& base, double index) {
  constexpr double lo_grid = 1e-6;
  constexpr double hi_grid = 1e12;
  constexpr double ratio = 1.05;
  if (detail::tail_admissible(base, lo_grid, index)) return lo_grid;
  double bad = lo_grid;
  double good = std::numeric_limits<double>::infinity();
  for (double b = lo_grid * ratio; b <= hi_grid; b *= ratio) {
    if (detail::tail_admissible(base, b, index)) {
      good = b;
      break;
    }
    bad = b;
  }
  if (!std::isfinite(good)) return good;
  for (int i = 0; i < 200 && good - bad > 1e-12 * good; ++i) {
    const double mid = 0.5 * (bad + good);
    (detail::tail_admissible(base, mid, index) ? good : bad) = mid;
  }
  return good;
}

inline ArmDistribution ArmDistribution::tail_inflated(const ArmDistribution& base,
                                                      double cutoff, double index) {
  require(base.has_closed_form_quantile(), "tail-inflated", "base",
          "must be exponential, lomax or pareto", 0.0);
  require(std::isfinite(index) && index > 1, "tail-inflated", "index", "must be > 1", index);
  require(std::isfinite(cutoff) && cutoff > 0, "tail-inflated", "cutoff", "must be positive",
          cutoff);
  double w = 0.0;
  double mass = 0.0;
  const double chi1 = detail::tail_admissible_chi1(base, cutoff, index, &w, &mass);
  if (!(std::isfinite(chi1) && chi1 > 0.0 && chi1 < 1.0)) {
    std::ostringstream msg;
    msg << "tail-inflated: cutoff " << cutoff << " gives chi1 = " << chi1
        << " outside (0, 1); smallest admissible cutoff is about "
        << min_admissible_cutoff(base, index);
    throw std::invalid_argument(msg.str());
  }
  return ArmDistribution(dist::TailInflated{std::make_shared<const ArmDistribution>(base),
                                            cutoff, index, chi1, w, mass});
}

inline std::string ArmDistribution::describe() const {
  std::ostringstream os;
  os.precision(10);
  std::visit(detail::overloaded{
                 [&](const dist::Exponential& d) { os << "exponential(mean=" << d.mean << ")"; },
                 [&](const dist::Lomax& d) {
                   os << "lomax(mean=" << d.mean << ", shape=" << d.shape << ")";
                 },
                 [&](const dist::Pareto& d) {
                   os << "pareto(scale=" << d.scale << ", shape=" << d.shape << ")";
                 },
                 [&](const dist::Gaussian& d) {
                   os << "gaussian(mean=" << d.mean << ", sd=" << d.sd << ")";
                 },
                 [&](const dist::Constant& d) { os << "constant(" << d.value << ")"; },
                 [&](const dist::TailInflated& d) {
                   os << "tail-inflated(" << d.base->describe() << ", cutoff=" << d.cutoff
                      << ", index=" << d.index << ")";
                 },
                 [&](const dist::Scaled& d) {
                   os << "scaled(" << d.base->describe() << ", factor=" << d.factor << ")";
                 },
             },
             params_);
  return os.str();
}

inline double ArmDistribution::cdf(double x) const {
  return std::visit(
      detail::overloaded{
          [&](const dist::Exponential& d) { return x <= 0 ? 0.0 : -std::expm1(-x / d.mean); },
          [&](const dist::Lomax& d) {
            return x <= 0 ? 0.0 : -std::expm1(-d.shape * std::log1p(x / d.scale()));
          },
          [&](const dist::Pareto& d) {
            return x <= d.scale ? 0.0 : -std::expm1(d.shape * std::log(d.scale / x));
          },
          [&](const dist::Gaussian& d) {
            return boost::math::cdf(detail::standard_normal(), (x - d.mean) / d.sd);
          },
          [&](const dist::Constant& d) { return x < d.value ? 0.0 : 1.0; },
          [&](const dist::TailInflated& d) {
            return x < d.cutoff ? d.chi1 * d.base->cdf(x) : 1.0 - d.tail_weight * d.base->ccdf(x);
          },
          [&](const dist::Scaled& d) { return d.base->cdf(x / d.factor); },
      },
      params_);
}

inline double ArmDistribution::ccdf(double x) const {
  return std::visit(
      detail::overloaded{
          [&](const dist::Exponential& d) { return x <= 0 ? 1.0 : std::exp(-x / d.mean); },
          [&](const dist::Lomax& d) {
            return x <= 0 ? 1.0 : std::exp(-d.shape * std::log1p(x / d.scale()));
          },
          [&](const dist::Pareto& d) {
            return x <= d.scale ? 1.0 : std::pow(d.scale / x, d.shape);
          },
          [&](const dist::Gaussian& d) {
            return boost::math::cdf(boost::math::complement(detail::standard_normal(),
                                                            (x - d.mean) / d.sd));
          },
          [&](const dist::Constant& d) { return x < d.value ? 1.0 : 0.0; },
          [&](const dist::TailInflated& d) {
            return x < d.cutoff ? 1.0 - d.chi1 * d.base->cdf(x) : d.tail_weight * d.base->ccdf(x);
          },
          [&](const dist::Scaled& d) { return d.base->ccdf(x / d.factor); },
      },
      params_);
}

inline double ArmDistribution::density(double x) const {
  return std::visit(
      detail::overloaded{
          [&](const dist::Exponential& d) {
            return x < 0 ? 0.0 : std::exp(-x / d.mean) / d.mean;
          },
          [&](const dist::Lomax& d) {
            const double lam = d.scale();
            return x < 0 ? 0.0 : d.shape / lam * std::exp(-(d.shape + 1) * std::log1p(x / lam));
          },
          [&](const dist::Pareto& d) {
            return x < d.scale ? 0.0 : d.shape / x * std::pow(d.scale / x, d.shape);
          },
          [&](const dist::Gaussian& d) {
            return boost::math::pdf(detail::standard_normal(), (x - d.mean) / d.sd) / d.sd;
          },
          [&](const dist::Constant&) -> double {
            throw std::logic_error("constant distribution has no density");
          },
          [&](const dist::TailInflated& d) {
            return (x < d.cutoff ? d.chi1 : d.tail_weight) * d.base->density(x);
          },
          [&](const dist::Scaled& d) { return d.base->density(x / d.factor) / d.factor; },
      },
      params_);
}

inline double ArmDistribution::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile: level must lie in (0, 1)");
  return std::visit(
      detail::overloaded{
          [&](const dist::Exponential& d) { return -d.mean * std::log1p(-u); },
          [&](const dist::Lomax& d) {
            return d.scale() * std::expm1(-std::log1p(-u) / d.shape);
          },
          [&](const dist::Pareto& d) {
            return d.scale * std::exp(-std::log1p(-u) / d.shape);
          },
          [&](const dist::Gaussian& d) {
            return d.mean + d.sd * boost::math::quantile(detail::standard_normal(), u);
          },
          [&](const dist::Constant& d) { return d.value; },
          [&](const dist::TailInflated& d) {
            if (u <= 1.0 - d.tail_mass) return d.base->quantile(std::min(u / d.chi1, 1.0 - 1e-16));
            return d.base->upper_quantile((1.0 - u) / d.tail_weight);
          },
          [&](const dist::Scaled& d) { return d.factor * d.base->quantile(u); },
      },
      params_);
}

inline double ArmDistribution::upper_quantile(double s) const {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("upper_quantile: level must lie in (0, 1)");
  return std::visit(
      detail::overloaded{
          [&](const dist::Exponential& d) { return -d.mean * std::log(s); },
          [&](const dist::Lomax& d) { return d.scale() * std::expm1(-std::log(s) / d.shape); },
          [&](const dist::Pareto& d) { return d.scale * std::exp(-std::log(s) / d.shape); },
          [&](const dist::Gaussian& d) {
            return d.mean + d.sd * boost::math::quantile(
                                       boost::math::complement(detail::standard_normal(), s));
          },
          [&](const dist::Constant& d) { return d.value; },
          [&](const dist::TailInflated& d) {
            if (s < d.tail_mass) return d.base->upper_quantile(s / d.tail_weight);
            return d.base->quantile(std::min((1.0 - s) / d.chi1, 1.0 - 1e-16));
          },
          [&](const dist::Scaled& d) { return d.factor * d.base->upper_quantile(s); },
      },
      params_);
}

inline double ArmDistribution::support_min() const {
  return std::visit(
      detail::overloaded{
          [](const dist::Exponential&) { return 0.0; },
          [](const dist::Lomax&) { return 0.0; },
          [](const dist::Pareto& d) { return d.scale; },
          [](const dist::Gaussian&) { return -std::numeric_limits<double>::infinity(); },
          [](const dist::Constant& d) { return d.value; },
          [](const dist::TailInflated& d) { return d.base->support_min(); },
          [](const dist::Scaled& d) { return d.factor * d.base->support_min(); },
      },
      params_);
}

inline std::vector<double> ArmDistribution::upper_quantile_breakpoints() const {
  if (const auto* t = std::get_if<dist::TailInflated>(&params_)) return {t->tail_mass};
  if (const auto* s = std::get_if<dist::Scaled>(&params_)) return s->base->upper_quantile_breakpoints();
  return {};
}

inline void ArmDistribution::sample_into(std::span<double> out, Engine& engine) const {
  std::visit(detail::overloaded{
                 [&](const dist::Exponential& d) {
                   for (double& x : out) x = -d.mean * std::log(uniform_open01(engine));
                 },
                 [&](const dist::Lomax& d) {
                   const double lam = d.scale();
                   const double inv = -1.0 / d.shape;
                   for (double& x : out) x = lam * std::expm1(inv * std::log(uniform_open01(engine)));
                 },
                 [&](const dist::Pareto& d) {
                   const double inv = -1.0 / d.shape;
                   for (double& x : out) x = d.scale * std::exp(inv * std::log(uniform_open01(engine)));
                 },
                 [&](const dist::Constant& d) {
                   for (double& x : out) x = d.value;
                 },
                 [&](const dist::Scaled& d) {
                   d.base->sample_into(out, engine);
                   for (double& x : out) x *= d.factor;
                 },
                 [&](const auto&) {
                   for (double& x : out) x = upper_quantile(uniform_open01(engine));
                 },
             },
             params_);
}

// ---------------------------------------------------------------------------
// Ground truth

struct GroundTruth {
  double mean;
  double var_alpha;
  double cvar_alpha;
};

namespace detail {

inline void check_level(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("confidence level alpha must lie in (0, 1)");
}

/// Integral of the upper quantile over s in [0, s_hi], split at kinks.
inline double upper_tail_integral(const ArmDistribution& d, double s_hi) {
  std::vector<double> cuts{0.0};
  for (double c : d.upper_quantile_breakpoints())
    if (c > 0.0 && c < s_hi) cuts.push_back(c);
  cuts.push_back(s_hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate_tanh_sinh([&](double s) { return d.upper_quantile(s); }, cuts[i],
                                 cuts[i + 1]);
  return total;
}

}  // namespace detail

/// Mean, VaR and CVaR at level alpha.
///
/// Closed forms for Exponential, Lomax, Pareto and Constant. For Gaussian and
/// TailInflated the CVaR is E[X 1{X >= v}] / beta evaluated in quantile space,
/// (1 / beta) * integral_0^beta Q(1 - s) ds, with tanh-sinh quadrature to
/// relative 1e-8; a non-converging integral raises quadrature_error.
inline GroundTruth ground_truth(const ArmDistribution& d, double alpha) {
  detail::check_level(alpha);
  const double beta = 1.0 - alpha;
  return std::visit(
      detail::overloaded{
          [&](const dist::Exponential& p) {
            const double v = -p.mean * std::log(beta);
            return GroundTruth{p.mean, v, v + p.mean};
          },
          [&](const dist::Lomax& p) {
            const double g = p.shape;
            const double tail = std::pow(beta, -1.0 / g);
            return GroundTruth{p.mean, p.scale() * (tail - 1.0), p.mean * (g * tail - (g - 1.0))};
          },
          [&](const dist::Pareto& p) {
            const double a = p.shape;
            const double v = p.scale * std::pow(beta, -1.0 / a);
            return GroundTruth{a * p.scale / (a - 1.0), v, v * a / (a - 1.0)};
          },
          [&](const dist::Constant& p) { return GroundTruth{p.value, p.value, p.value}; },
          [&](const dist::Gaussian& p) {
            const double v = d.quantile(alpha);
            return GroundTruth{p.mean, v, detail::upper_tail_integral(d, beta) / beta};
          },
          [&](const dist::TailInflated&) {
            const double mean = detail::upper_tail_integral(d, 1.0);
            const double v = d.quantile(alpha);
            return GroundTruth{mean, v, detail::upper_tail_integral(d, beta) / beta};
          },
          [&](const dist::Scaled& p) {
            const GroundTruth g = ground_truth(*p.base, alpha);
            return GroundTruth{p.factor * g.mean, p.factor * g.var_alpha, p.factor * g.cvar_alpha};
          },
      },
      d.params());
}

inline double mean_of(const ArmDistribution& d) { return ground_truth(d, 0.5).mean; }

/// E|X - center|^p by quadrature of |Q(u) - center|^p over u in (0, 1),
/// split where the quantile crosses `center`. Infinite moments surface as a
/// quadrature_error.
inline double absolute_moment(const ArmDistribution& d, double p, double center = 0.0) {
  if (!(p > 0.0)) throw std::domain_error("absolute_moment: p must be positive");
  if (d.family() == Family::Constant) return std::pow(std::abs(d.upper_quantile(0.5) - center), p);
  std::vector<double> cuts{0.0, 1.0};
  for (double c : d.upper_quantile_breakpoints()) cuts.push_back(c);
  const double s_c = d.ccdf(center);
  if (s_c > 0.0 && s_c < 1.0) cuts.push_back(s_c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += integrate_tanh_sinh(
        [&](double s) { return std::pow(std::abs(d.upper_quantile(s) - center), p); }, cuts[i],
        cuts[i + 1]);
  return total;
}

/// Builds a member of `family` whose CVaR at `alpha` equals target_cvar.
///
/// The free parameter is the mean (Exponential, Lomax, Gaussian), the scale
/// (Pareto) or the value (Constant); `shape_or_sd` fixes the other one.
/// Bracketed bisection on the free parameter; throws std::invalid_argument if
/// the target is unattainable.
inline ArmDistribution solve_mean_for_cvar(Family family, double shape_or_sd,
                                           double target_cvar, double alpha) {
  detail::check_level(alpha);
  if (!std::isfinite(target_cvar)) throw std::invalid_argument("target cvar must be finite");
  auto make = [&](double free) {
    switch (family) {
      case Family::Exponential: return ArmDistribution::exponential(free);
      case Family::Lomax: return ArmDistribution::lomax(free, shape_or_sd);
      case Family::Pareto: return ArmDistribution::pareto(free, shape_or_sd);
      case Family::Gaussian: return ArmDistribution::gaussian(free, shape_or_sd);
      default: break;
    }
    throw std::invalid_argument(std::string("solve_mean_for_cvar: unsupported family ") +
                                family_name(family));
  };
  if (family == Family::Constant) return ArmDistribution::constant(target_cvar);
  const bool positive_param = family != Family::Gaussian;
  if (positive_param && !(target_cvar > 0.0)) {
    std::ostringstream msg;
    msg << "solve_mean_for_cvar: " << family_name(family) << " cannot reach CVaR "
        << target_cvar << " (must be positive)";
    throw std::invalid_argument(msg.str());
  }
  auto cvar_at = [&](double free) { return ground_truth(make(free), alpha).cvar_alpha; };

  double lo = 0.0;
  double hi = 0.0;
  if (positive_param) {
    // CVaR is proportional to the free parameter for these scale families.
    const double unit = cvar_at(1.0);
    const double guess = target_cvar / unit;
    lo = guess * 0.5;
    hi = guess * 2.0;
  } else {
    lo = target_cvar - 10.0 * shape_or_sd;
    hi = target_cvar + 10.0 * shape_or_sd;
  }
  for (int i = 0; i < 200 && cvar_at(lo) > target_cvar; ++i)
    lo = positive_param ? lo * 0.5 : lo - (hi - lo);
  for (int i = 0; i < 200 && cvar_at(hi) < target_cvar; ++i)
    hi = positive_param ? hi * 2.0 : hi + (hi - lo);
  if (cvar_at(lo) > target_cvar || cvar_at(hi) < target_cvar)
    throw std::invalid_argument("solve_mean_for_cvar: target CVaR could not be bracketed");
  for (int i = 0; i < 300 && hi - lo > 1e-15 * std::max(std::abs(lo), std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (cvar_at(mid) < target_cvar ? lo : hi) = mid;
  }
  ArmDistribution out = make(0.5 * (lo + hi));
  const double got = cvar_at(0.5 * (lo + hi));
  if (std::abs(got - target_cvar) > 1e-6 * std::max(1.0, std::abs(target_cvar)))
    throw std::invalid_argument("solve_mean_for_cvar: bisection failed to reach the target");
  return out;
}

}  // namespace riskbai
