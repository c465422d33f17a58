#include "texgram/synthesis/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "texgram/error.hpp"

namespace texgram::synthesis {

void LbfgsOptions::validate() const {
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw ConfigError("L-BFGS needs 0 < c1 < c2 < 1");
  }
  if (history_size < 1) throw ConfigError("L-BFGS history size must be at least 1");
  if (max_iterations < 1) throw ConfigError("L-BFGS max_iterations must be at least 1");
  if (max_line_search_evaluations < 1) throw ConfigError("line search needs an evaluation budget");
  if (!(grad_tolerance >= 0.0)) throw ConfigError("gradient tolerance must be nonnegative");
}

const char* to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::kConverged: return "converged";
    case LbfgsStatus::kMaxIterations: return "max_iterations";
    case LbfgsStatus::kLineSearchFailed: return "line_search_failed";
  }
  return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Minimizer of the cubic interpolating (x1, f1, g1) and (x2, f2, g2),
// clamped to [lo, hi]; bisects when the cubic has no real minimizer.
double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2,
                       double lo, double hi) {
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_square = d1 * d1 - g1 * g2;
  if (d2_square >= 0.0) {
    const double d2 = std::sqrt(d2_square);
    const double pos = x1 <= x2 ? x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
                                : x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    if (std::isfinite(pos)) return std::clamp(pos, lo, hi);
  }
  return 0.5 * (lo + hi);
}

struct Point {
  double t = 0.0;
  double f = 0.0;
  double slope = 0.0;  // directional derivative along d
  std::vector<double> grad;
  std::size_t evaluation = 0;
};

class LineSearch {
 public:
  LineSearch(const Objective& objective, const LbfgsOptions& options, std::size_t& evaluations)
      : objective_(objective), options_(options), evaluations_(evaluations) {}

  // Strong-Wolfe search along d from x (value f0, gradient g0). Returns the
  // best point found; t == 0 means no acceptable step.
  Point search(std::span<const double> x, std::span<const double> d, const Point& origin,
               double t) {
    const double f0 = origin.f;
    const double slope0 = origin.slope;
    const double c1 = options_.wolfe_c1;
    const double c2 = options_.wolfe_c2;
    const double d_norm = max_abs(d);
    const auto armijo = [&](const Point& p) { return p.f <= f0 + c1 * p.t * slope0; };
    const auto curvature = [&](const Point& p) { return std::abs(p.slope) <= -c2 * slope0; };

    Point prev = origin;
    Point cur = evaluate(x, d, t);
    std::size_t used = 1;

    Point lo, hi;
    bool bracketed = false;
    while (true) {
      if (!std::isfinite(cur.f) || !armijo(cur) || (used > 1 && cur.f >= prev.f)) {
        lo = prev;
        hi = cur;
        bracketed = true;
        break;
      }
      if (curvature(cur)) return cur;
      if (cur.slope >= 0.0) {
        lo = cur;
        hi = prev;
        bracketed = true;
        break;
      }
      if (used >= options_.max_line_search_evaluations) return cur;
      const double next = cubic_minimizer(prev.t, prev.f, prev.slope, cur.t, cur.f, cur.slope,
                                          cur.t + 0.01 * (cur.t - prev.t), 10.0 * cur.t);
      prev = std::move(cur);
      cur = evaluate(x, d, next);
        ++used;
    }

    // Zoom: lo always satisfies Armijo and has the lowest value seen so far.
    bool insufficient_progress = false;
    while (bracketed && used < options_.max_line_search_evaluations) {
      const double width = std::abs(hi.t - lo.t);
      if (width * d_norm < options_.step_tolerance) break;
      const double lo_t = std::min(lo.t, hi.t);
      const double hi_t = std::max(lo.t, hi.t);
      double t_new = std::isfinite(hi.f)
                         ? cubic_minimizer(lo.t, lo.f, lo.slope, hi.t, hi.f, hi.slope, lo_t, hi_t)
                         : 0.5 * (lo_t + hi_t);
      // Keep trial points away from the bracket ends.
      const double eps = 0.1 * (hi_t - lo_t);
      if (std::min(hi_t - t_new, t_new - lo_t) < eps) {
        if (insufficient_progress || t_new >= hi_t || t_new <= lo_t) {
          t_new = std::abs(t_new - hi_t) < std::abs(t_new - lo_t) ? hi_t - eps : lo_t + eps;
          insufficient_progress = false;
        } else {
          insufficient_progress = true;
        }
      } else {
        insufficient_progress = false;
      }

      Point p = evaluate(x, d, t_new);
      ++used;
      if (!std::isfinite(p.f) || !armijo(p) || p.f >= lo.f) {
        hi = std::move(p);
      } else {
        if (curvature(p)) return p;
        if (p.slope * (hi.t - lo.t) >= 0.0) hi = lo;
        lo = std::move(p);
      }
    }
    return lo;
  }

 private:
  Point evaluate(std::span<const double> x, std::span<const double> d, double t) {
    std::vector<double> trial(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + t * d[i];
    Point p;
    p.t = t;
    p.grad.assign(x.size(), 0.0);
    p.f = objective_(trial, p.grad);
    p.evaluation = evaluations_++;
    p.slope = finite(p.grad) ? dot(p.grad, d) : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(p.slope)) p.f = std::numeric_limits<double>::infinity();
    return p;
  }

  const Objective& objective_;
  const LbfgsOptions& options_;
  std::size_t& evaluations_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0,
                           const LbfgsOptions& options) {
  options.validate();
  LbfgsResult result;
  result.x = std::move(x0);
  const std::size_t n = result.x.size();
  if (!finite(result.x)) throw NumericalError("L-BFGS starting point is not finite");

  result.gradient.assign(n, 0.0);
  result.value = objective(result.x, result.gradient);
  result.evaluations = 1;
  if (!std::isfinite(result.value) || !finite(result.gradient)) {
    throw NumericalError("objective is not finite at the starting point");
  }
  result.trace.push_back(result.value);
  result.trace_evaluation.push_back(0);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(n), alpha(options.history_size);
  LineSearch line_search(objective, options, result.evaluations);

  while (true) {
    if (max_abs(result.gradient) <= options.grad_tolerance) {
      result.status = LbfgsStatus::kConverged;
      return result;
    }
    if (result.iterations >= options.max_iterations) {
      result.status = LbfgsStatus::kMaxIterations;
      return result;
    }

    // Two-loop recursion: d = -H g.
    for (std::size_t i = 0; i < n; ++i) d[i] = -result.gradient[i];
    const std::size_t m = s_hist.size();
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y_hist[k][i];
    }
    if (m > 0) {
      const double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha[k] - beta) * s_hist[k][i];
    }

    double slope = dot(result.gradient, d);
    if (!(slope < 0.0)) {
      // Curvature information went stale; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -result.gradient[i];
      slope = dot(result.gradient, d);
    }

    double t = 1.0;
    if (result.iterations == 0 || m == 0) {
      double l1 = 0.0;
      for (double g : result.gradient) l1 += std::abs(g);
      t = std::min(1.0, 1.0 / l1);
    }

    Point origin;
    origin.f = result.value;
    origin.slope = slope;
    origin.grad = result.gradient;
    Point step = line_search.search(result.x, d, origin, t);
    if (step.t == 0.0 || !(step.f < result.value)) {
      result.status = LbfgsStatus::kLineSearchFailed;
      return result;
    }

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = step.t * d[i];
      y[i] = step.grad[i] - result.gradient[i];
      result.x[i] += s[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-10 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (s_hist.size() == options.history_size) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    result.value = step.f;
    result.gradient = std::move(step.grad);
    ++result.iterations;
    result.trace.push_back(result.value);
    result.trace_evaluation.push_back(step.evaluation);
  }
}

}  // namespace texgram::synthesis
