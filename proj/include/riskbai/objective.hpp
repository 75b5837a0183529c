#pragma once

#include "riskbai/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace riskbai {

/// obj(X) = xi1 * E[X] + xi2 * CVaR_alpha(X); smaller is better.
struct RiskObjective {
  double alpha = 0.95;
  double xi1 = 1.0;
  double xi2 = 0.0;

  static RiskObjective mean_only(double alpha = 0.95) { return {alpha, 1.0, 0.0}; }
  static RiskObjective cvar_only(double alpha = 0.95) { return {alpha, 0.0, 1.0}; }

  double beta() const { return 1.0 - alpha; }

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("objective: alpha must lie in (0, 1)");
    if (!(xi1 >= 0.0 && xi2 >= 0.0) || !std::isfinite(xi1) || !std::isfinite(xi2))
      throw std::invalid_argument("objective: weights must be finite and nonnegative");
    if (!(xi1 + xi2 > 0.0)) throw std::invalid_argument("objective: xi1 + xi2 must be positive");
  }

  double combine(double mean, double cvar) const {
    // A zero weight drops its term entirely so an unused estimate never enters.
    double v = 0.0;
    if (xi1 != 0.0) v += xi1 * mean;
    if (xi2 != 0.0) v += xi2 * cvar;
    return v;
  }

  double value(const GroundTruth& g) const { return combine(g.mean, g.cvar_alpha); }
};

inline double objective_value(const ArmDistribution& d, const RiskObjective& obj) {
  return obj.value(ground_truth(d, obj.alpha));
}

}  // namespace riskbai
