#pragma once

#include "riskbai/rng.hpp"
#include "riskbai/quadrature.hpp"
#include "riskbai/distributions.hpp"
#include "riskbai/estimators.hpp"
#include "riskbai/objective.hpp"
#include "riskbai/bandit.hpp"
#include "riskbai/bounds.hpp"
#include "riskbai/harness.hpp"
