#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace texgram::synthesis {

struct LbfgsOptions {
  std::size_t max_iterations = 1000;
  std::size_t history_size = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  double grad_tolerance = 1e-7;  // on the infinity norm of the gradient
  std::size_t max_line_search_evaluations = 25;
  // Line search gives up once |bracket| * max|direction| drops below this.
  double step_tolerance = 1e-14;

  // Throws ConfigError unless 0 < c1 < c2 < 1, history >= 1, iterations >= 1.
  void validate() const;
};

enum class LbfgsStatus { kConverged, kMaxIterations, kLineSearchFailed };

const char* to_string(LbfgsStatus status);

// Returns f(x) and writes the gradient into `grad` (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsResult {
  std::vector<double> x;     // best accepted iterate
  double value = 0.0;
  std::vector<double> gradient;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;
  std::size_t iterations = 0;   // accepted steps
  std::size_t evaluations = 0;  // objective calls
  // trace[i] is f after i accepted steps (trace[0] = f(x0)); the objective
  // call that produced it is trace_evaluation[i] (0-based).
  std::vector<double> trace;
  std::vector<std::size_t> trace_evaluation;
};

// Limited-memory BFGS with a strong-Wolfe line search (bracketing plus
// cubic-interpolation zoom). Throws NumericalError when f(x0) or its gradient
// is not finite; a failing line search ends the run with the best iterate.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options);

}  // namespace texgram::synthesis
