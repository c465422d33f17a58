#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace texgram {

inline constexpr std::array<std::string_view, 7> kBrainScoreMetrics = {
    "average_vision", "neural_vision", "behavior_vision", "V1", "V2", "V4", "IT"};

inline constexpr double kSignificanceLevel = 0.05;

struct BrainScoreRecord {
  std::string model;
  std::array<double, 7> scores{};  // ordered as kBrainScoreMetrics

  double score(std::string_view metric) const;
};

struct CorrelationResult {
  std::string metric;
  double r = 0.0;
  double p = 1.0;
  std::size_t n = 0;
  bool significant = false;
  bool defined = true;  // false when either input has zero variance
};

// Sample Pearson correlation; nullopt when either input has zero variance.
// Throws DataError on length mismatch, fewer than 3 samples or non-finite data.
std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y);

// Two-sided p-value of r under the t distribution with n - 2 degrees of freedom.
double pearson_p(double r, std::size_t n);

// I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);

// One row per metric in kBrainScoreMetrics order. Every model in `best_mi`
// must have a record; records for other models are ignored.
std::vector<CorrelationResult> correlate_mi_brainscore(const std::map<std::string, double>& best_mi,
                                                       std::span<const BrainScoreRecord> records);

// metric,r,p,n,significant
std::string correlation_csv(std::span<const CorrelationResult> results);

}  // namespace texgram
