#include "texgram/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "texgram/error.hpp"

namespace texgram {

double BrainScoreRecord::score(std::string_view metric) const {
  for (std::size_t i = 0; i < kBrainScoreMetrics.size(); ++i) {
    if (kBrainScoreMetrics[i] == metric) return scores[i];
  }
  throw DataError("unknown Brain-Score metric '" + std::string(metric) + "'");
}

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson_r inputs differ in length");
  if (x.size() < 3) throw DataError("pearson_r needs at least 3 samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw DataError("pearson_r input has non-finite values");
    }
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DataError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DataError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  // The continued fraction converges fast for x < (a + 1) / (a + b + 2).
  if (x > (a + 1.0) / (a + b + 2.0)) return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x);

  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double f = d;
  for (int m = 1; m <= 10000; ++m) {
    const double md = m;
    double num = md * (b - md) * x / ((a + 2 * md - 1.0) * (a + 2 * md));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    f *= d * c;

    num = -(a + md) * (a + b + md) * x / ((a + 2 * md) * (a + 2 * md + 1.0));
    d = 1.0 + num * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    f *= delta;
    if (std::abs(delta - 1.0) < eps) return std::exp(log_front) * f / a;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DataError("t distribution needs df > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

double pearson_p(double r, std::size_t n) {
  if (n < 3) throw DataError("pearson_p needs n >= 3");
  if (!(std::abs(r) <= 1.0)) throw DataError("correlation outside [-1, 1]");
  if (std::abs(r) == 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  // With t = r sqrt(df / (1 - r^2)), df / (df + t^2) reduces to 1 - r^2.
  const double p = regularized_incomplete_beta(0.5 * df, 0.5, 1.0 - r * r);
  return std::clamp(p, 0.0, 1.0);
}

std::vector<CorrelationResult> correlate_mi_brainscore(const std::map<std::string, double>& best_mi,
                                                       std::span<const BrainScoreRecord> records) {
  std::vector<double> mi;
  std::vector<const BrainScoreRecord*> matched;
  for (const BrainScoreRecord& record : records) {
    const auto it = best_mi.find(record.model);
    if (it == best_mi.end()) continue;
    mi.push_back(it->second);
    matched.push_back(&record);
  }
  if (matched.size() != best_mi.size()) {
    for (const auto& [model, value] : best_mi) {
      const bool found = std::any_of(matched.begin(), matched.end(),
                                     [&](const BrainScoreRecord* r) { return r->model == model; });
      if (!found) throw DataError("model mismatch: no Brain-Score record for '" + model + "'");
    }
  }

  std::vector<CorrelationResult> results;
  for (std::size_t m = 0; m < kBrainScoreMetrics.size(); ++m) {
    std::vector<double> scores;
    for (const BrainScoreRecord* record : matched) {
      if (!std::isfinite(record->scores[m])) {
        throw DataError("missing metric " + std::string(kBrainScoreMetrics[m]) + " for " +
                        record->model);
      }
      scores.push_back(record->scores[m]);
    }
    CorrelationResult result{std::string(kBrainScoreMetrics[m]), 0.0, 1.0, matched.size(), false,
                             false};
    if (const auto r = pearson_r(mi, scores)) {
      result.r = *r;
      result.p = pearson_p(*r, matched.size());
      result.significant = result.p < kSignificanceLevel;
      result.defined = true;
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::string correlation_csv(std::span<const CorrelationResult> results) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "metric,r,p,n,significant\n";
  for (const CorrelationResult& r : results) {
    csv << r.metric << ',';
    if (r.defined) {
      csv << r.r << ',' << r.p;
    } else {
      csv << "undefined,undefined";
    }
    csv << ',' << r.n << ',' << (r.significant ? "true" : "false") << '\n';
  }
  return csv.str();
}

}  // namespace texgram
