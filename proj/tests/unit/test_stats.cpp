#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "texgram/error.hpp"
#include "texgram/pipeline/brainscore.hpp"
#include "texgram/stats.hpp"

namespace fx = texgram::testing;

using namespace texgram;

namespace {

double covariance_oracle_r(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

}  // namespace

TEST(PearsonR, PerfectAffineRelations) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y(5), z(5);
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return 2 * v + 1; });
  std::transform(x.begin(), x.end(), z.begin(), [](double v) { return -v; });
  EXPECT_NEAR(*pearson_r(x, y), 1.0, 1e-15);
  EXPECT_NEAR(*pearson_r(x, z), -1.0, 1e-15);
}

TEST(PearsonR, MatchesCovarianceOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_vector(12, rng), y = random_vector(12, rng);
    EXPECT_NEAR(*pearson_r(x, y), covariance_oracle_r(x, y), 1e-12);
  }
}

TEST(PearsonR, DegenerateAndInvalidInput) {
  const std::vector<double> x{1, 2, 3}, c{4, 4, 4};
  EXPECT_FALSE(pearson_r(x, c).has_value());
  EXPECT_THROW(pearson_r(x, std::vector<double>{1, 2}), DataError);
  EXPECT_THROW(pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2}), DataError);
  EXPECT_THROW(pearson_r(x, std::vector<double>{1, NAN, 2}), DataError);
}

TEST(PearsonP, CorrelationTableRows) {
  const double p_avg = pearson_p(-0.130, 12);
  const double p_beh = pearson_p(-0.029, 12);
  EXPECT_GE(p_avg, 0.67);
  EXPECT_LE(p_avg, 0.70);
  EXPECT_GE(p_beh, 0.91);
  EXPECT_LE(p_beh, 0.93);
}

TEST(PearsonP, AllPublishedRowsRoundToTheirPValues) {
  const std::vector<std::pair<double, double>> rows{{-0.130, 0.68}, {-0.165, 0.60}, {-0.029, 0.92},
                                                    {-0.229, 0.47}, {-0.262, 0.41}, {-0.063, 0.84},
                                                    {-0.104, 0.74}};
  for (const auto& [r, p] : rows) EXPECT_NEAR(pearson_p(r, 12), p, 0.01) << r;
}

TEST(PearsonP, PerfectCorrelationHasZeroP) {
  for (std::size_t n : {3, 12, 100}) {
    EXPECT_EQ(pearson_p(1.0, n), 0.0);
    EXPECT_EQ(pearson_p(-1.0, n), 0.0);
  }
  EXPECT_EQ(pearson_p(0.0, 12), 1.0);
}

TEST(PearsonP, MonotoneDecreasingInAbsoluteR) {
  for (std::size_t n : {4, 12, 50}) {
    double prev = 2.0;
    for (int i = 0; i <= 100; ++i) {
      const double p = pearson_p(i / 100.0, n);
      EXPECT_LE(p, prev);
      EXPECT_EQ(p, pearson_p(-i / 100.0, n));
      prev = p;
    }
  }
}

TEST(IncompleteBeta, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 5.0, 30.0}) {
    for (double b : {0.5, 1.0, 3.0, 12.0}) {
      for (double x : {0.0, 0.01, 0.2, 0.5, 0.77, 0.99, 1.0}) {
        EXPECT_NEAR(regularized_incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12)
            << a << " " << b << " " << x;
      }
    }
  }
}

TEST(StudentT, MatchesBoostAndMonteCarlo) {
  std::mt19937_64 rng(7);
  for (double df : {1.0, 3.0, 10.0}) {
    const boost::math::students_t dist(df);
    std::student_t_distribution<double> sampler(df);
    std::vector<double> samples(1000000);
    for (double& s : samples) s = sampler(rng);
    std::sort(samples.begin(), samples.end());
    for (double t : {-3.0, -1.0, -0.25, 0.0, 0.5, 2.0, 4.0}) {
      const double cdf = student_t_cdf(t, df);
      EXPECT_NEAR(cdf, boost::math::cdf(dist, t), 1e-12);
      const double empirical =
          static_cast<double>(std::upper_bound(samples.begin(), samples.end(), t) - samples.begin()) /
          samples.size();
      EXPECT_NEAR(cdf, empirical, 2e-3) << "df " << df << " t " << t;
    }
  }
}

TEST(StatsProperty, AffineInvarianceAndNegation) {
  std::mt19937_64 rng(8);
  const auto x = random_vector(12, rng), y = random_vector(12, rng);
  const double r = *pearson_r(x, y);
  std::vector<double> ax(12), ny(12);
  std::transform(x.begin(), x.end(), ax.begin(), [](double v) { return 3.5 * v - 2.0; });
  std::transform(y.begin(), y.end(), ny.begin(), [](double v) { return -v; });
  EXPECT_NEAR(*pearson_r(ax, y), r, 1e-12);
  EXPECT_NEAR(*pearson_r(x, ny), -r, 1e-12);
  EXPECT_NEAR(pearson_p(*pearson_r(x, ny), 12), pearson_p(r, 12), 1e-12);
}

TEST(Correlate, SelfCorrelationGivesOne) {
  const auto records = pipeline::ingest_brainscore_csv(fx::data_dir() / "brainscore_table.csv");
  std::map<std::string, double> mi;
  for (const auto& r : records) mi[r.model] = r.score("average_vision");
  const auto results = correlate_mi_brainscore(mi, records);
  ASSERT_EQ(results.size(), 7u);
  EXPECT_EQ(results[0].metric, "average_vision");
  EXPECT_NEAR(results[0].r, 1.0, 1e-12);
  EXPECT_EQ(results[0].p, 0.0);
  EXPECT_TRUE(results[0].significant);
}

TEST(Correlate, ComposesPearsonColumnWise) {
  const auto records = pipeline::ingest_brainscore_csv(fx::data_dir() / "brainscore_table.csv");
  ASSERT_EQ(records.size(), 12u);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(2.0, 4.0);
  std::map<std::string, double> mi;
  for (const auto& r : records) mi[r.model] = u(rng);
  const auto results = correlate_mi_brainscore(mi, records);
  ASSERT_EQ(results.size(), 7u);
  for (std::size_t m = 0; m < 7; ++m) {
    std::vector<double> x, y;
    for (const auto& r : records) {
      x.push_back(mi[r.model]);
      y.push_back(r.scores[m]);
    }
    const double r = *pearson_r(x, y);
    EXPECT_EQ(results[m].metric, kBrainScoreMetrics[m]);
    EXPECT_EQ(results[m].n, 12u);
    EXPECT_EQ(results[m].r, r);
    EXPECT_EQ(results[m].p, pearson_p(r, 12));
    EXPECT_EQ(results[m].significant, results[m].p < kSignificanceLevel);
    EXPECT_TRUE(results[m].defined);
  }
}

TEST(Correlate, ConstantMiIsUndefined) {
  const auto records = pipeline::ingest_brainscore_csv(fx::data_dir() / "brainscore_table.csv");
  std::map<std::string, double> mi;
  for (const auto& r : records) mi[r.model] = 3.0;
  const auto results = correlate_mi_brainscore(mi, records);
  ASSERT_EQ(results.size(), 7u);
  for (const auto& r : results) {
    EXPECT_FALSE(r.defined);
    EXPECT_FALSE(r.significant);
  }
  const std::string csv = correlation_csv(results);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "metric,r,p,n,significant");
  EXPECT_NE(csv.find("average_vision,undefined,undefined,12,false"), std::string::npos);
}

TEST(Correlate, MissingRecordIsAnError) {
  const auto records = pipeline::ingest_brainscore_csv(fx::data_dir() / "brainscore_table.csv");
  std::map<std::string, double> mi{{"AlexNet", 1.0}, {"VGG-19", 2.0}, {"NoSuchNet", 3.0}};
  EXPECT_THROW(correlate_mi_brainscore(mi, records), DataError);
}
