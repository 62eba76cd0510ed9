#pragma once

#include <functional>
#include <span>
#include <vector>

namespace hhlink {

// Bound vectors may use +/-infinity for unconstrained coordinates.
struct BoxBounds {
  std::vector<double> lower, upper;
};

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;
};

using BoxObjective = std::function<ObjectiveValue(std::span<const double>)>;

struct OptimOptions {
  int max_iter = 200;
  double grad_tol = 1e-6;   // projected-gradient infinity norm
  double value_tol = 0.0;   // relative improvement between iterations; 0 disables
  double step_tol = 0.0;    // parameter-change infinity norm; 0 disables
  int history = 10;         // quasi-Newton memory
};

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  double projected_grad_norm = 0.0;
};

// Minimizes f over a box via limited-memory quasi-Newton steps projected onto
// the bounds, with Armijo backtracking along the projected arc and a steepest
// descent fallback. Tolerates the piecewise-smooth objectives produced by
// max/min compositions (the caller supplies a subgradient there).
OptimResult minimize_box(const BoxObjective& f, std::vector<double> x0, const BoxBounds& bounds,
                         const OptimOptions& options = {});

}  // namespace hhlink
