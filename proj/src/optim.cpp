#include "hhlink/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "hhlink/errors.hpp"

namespace hhlink {

namespace {

void project(std::vector<double>& x, const BoxBounds& b) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], b.lower[i], b.upper[i]);
}

double projected_grad_norm(const std::vector<double>& x, const std::vector<double>& g,
                           const BoxBounds& b) {
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], b.lower[i], b.upper[i]);
    norm = std::max(norm, std::abs(x[i] - moved));
  }
  return norm;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

}  // namespace

OptimResult minimize_box(const BoxObjective& f, std::vector<double> x0, const BoxBounds& bounds,
                         const OptimOptions& options) {
  const std::size_t n = x0.size();
  if (bounds.lower.size() != n || bounds.upper.size() != n)
    fail(ErrorCode::Config, "bound vectors must match the parameter length");

  OptimResult result;
  std::vector<double> x = std::move(x0);
  project(x, bounds);

  ObjectiveValue cur = f(x);
  if (cur.gradient.size() != n) fail(ErrorCode::Config, "gradient length mismatch");

  struct Memory {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Memory> memory;

  std::vector<double> direction(n), x_new(n), step(n);
  constexpr double c1 = 1e-4;

  // Armijo backtracking along the projected arc. Returns the accepted step
  // size, 0 on failure; fills x_new/next on success.
  ObjectiveValue next;
  auto line_search = [&](const std::vector<double>& d, int max_halvings) -> double {
    double step_size = 1.0;
    for (int halving = 0; halving < max_halvings; ++halving, step_size *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step_size * d[i];
      project(x_new, bounds);
      double gs = 0.0;  // g . (x_new - x): slope along the projected step
      for (std::size_t i = 0; i < n; ++i) gs += cur.gradient[i] * (x_new[i] - x[i]);
      if (gs >= 0.0) continue;  // projection removed all descent at this size
      next = f(x_new);
      if (next.value <= cur.value + c1 * gs) return step_size;
    }
    return 0.0;
  };

  int small_improvements = 0;
  int iter = 0;
  while (iter < options.max_iter) {
    result.projected_grad_norm = projected_grad_norm(x, cur.gradient, bounds);
    if (result.projected_grad_norm < options.grad_tol) {
      result.converged = true;
      break;
    }

    // Quasi-Newton direction via the two-loop recursion.
    direction = cur.gradient;
    std::vector<double> alpha(memory.size());
    for (std::size_t m = memory.size(); m-- > 0;) {
      alpha[m] = memory[m].rho * dot(memory[m].s, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] -= alpha[m] * memory[m].y[i];
    }
    if (!memory.empty()) {
      const Memory& last = memory.back();
      const double scale = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& d : direction) d *= scale;
    }
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const double beta = memory[m].rho * dot(memory[m].y, direction);
      for (std::size_t i = 0; i < n; ++i) direction[i] += (alpha[m] - beta) * memory[m].s[i];
    }
    for (auto& d : direction) d = -d;

    double accepted = line_search(direction, 30);
    if (accepted == 0.0 || accepted < 1e-6) {
      // The curvature memory no longer describes this neighborhood (typical
      // after crossing a kink of a piecewise-smooth objective). Restart from
      // a step-length-normalized steepest descent.
      memory.clear();
      const double gnorm = inf_norm(cur.gradient);
      if (gnorm > 0.0) {
        std::vector<double> steepest(n);
        for (std::size_t i = 0; i < n; ++i) steepest[i] = -cur.gradient[i] / gnorm;
        const double retried = line_search(steepest, 60);
        if (retried > 0.0) accepted = retried;
      }
    }
    if (accepted == 0.0) {
      // No descent step exists along either direction. At a stationary point
      // that is convergence; at a kink it is an honest stall.
      result.converged =
          projected_grad_norm(x, cur.gradient, bounds) <= std::max(options.grad_tol, 1e-12);
      break;
    }

    double step_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      step[i] = x_new[i] - x[i];
      step_norm = std::max(step_norm, std::abs(step[i]));
    }

    Memory mem;
    mem.s = step;
    mem.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) mem.y[i] = next.gradient[i] - cur.gradient[i];
    const double sy = dot(mem.s, mem.y);
    if (sy > 1e-12) {
      mem.rho = 1.0 / sy;
      memory.push_back(std::move(mem));
      if (memory.size() > static_cast<std::size_t>(options.history)) memory.pop_front();
    }

    const double improvement = cur.value - next.value;
    x.swap(x_new);
    cur = std::move(next);
    ++iter;

    if (options.value_tol > 0.0) {
      // One negligible improvement can just be a timid line-search step;
      // two in a row means the objective has genuinely flattened.
      if (improvement <= options.value_tol * (std::abs(cur.value) + 1.0)) {
        if (++small_improvements >= 2) {
          result.converged = true;
          break;
        }
      } else {
        small_improvements = 0;
      }
    }
    if (options.step_tol > 0.0 && step_norm < options.step_tol) {
      result.converged = true;
      break;
    }
  }

  result.x = std::move(x);
  result.value = cur.value;
  result.iterations = iter;
  result.projected_grad_norm = projected_grad_norm(result.x, cur.gradient, bounds);
  return result;
}

}  // namespace hhlink
