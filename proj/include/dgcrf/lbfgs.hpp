#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace dgcrf {

// Fills grad and returns the value at x.
using GradientObjective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 100;
  double grad_tol = 1e-8;   // on ‖g‖∞
  double value_tol = 1e-14; // relative change of f between iterations
  double c1 = 1e-4;         // strong-Wolfe sufficient decrease
  double c2 = 0.9;          // strong-Wolfe curvature
  int max_line_search = 40;
};

enum class LbfgsStatus { GradientTolerance, ValueTolerance, MaxIterations, LineSearchFailed };
std::string_view to_string(LbfgsStatus s);

struct LbfgsIteration {
  int iter = 0;
  double value = 0.0;
  double grad_norm = 0.0;  // ∞-norm
  double step = 0.0;
  int evaluations = 0;
  bool line_search_ok = true;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> grad;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStatus status = LbfgsStatus::MaxIterations;
  std::vector<LbfgsIteration> trace;
};

// Two-loop recursion L-BFGS with a strong-Wolfe bracketing/zoom line search.
// A failed line search first drops the curvature history and retries along
// −g; a second failure stops with LineSearchFailed and the best point found.
LbfgsResult lbfgs_minimize(const GradientObjective& objective, std::vector<double> x0, const LbfgsOptions& options,
                           const std::function<void(const LbfgsIteration&)>& on_iteration = {});

}  // namespace dgcrf
