#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "texgram/error.hpp"
#include "texgram/rdm.hpp"

namespace fx = texgram::testing;

using namespace texgram;

namespace {

std::vector<GramVector> random_vectors(std::size_t count, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 10.0);
  std::vector<GramVector> out(count);
  for (auto& v : out) {
    v.n = n;
    v.values.resize(gram_vector_length(n));
    for (double& x : v.values) x = normal(rng);
  }
  return out;
}

std::vector<std::string> ids(std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back("item" + std::to_string(i));
  return out;
}

}  // namespace

TEST(Rdm, IdenticalVectorsAreAtDistanceZero) {
  const GramVector v{2, {1, 2, 3}};
  const Rdm rdm = compute_rdm(std::vector<GramVector>{v, v}, ids(2));
  EXPECT_EQ(rdm.values, (std::vector<float>{0, 0, 0, 0}));
}

TEST(Rdm, ThreeFourFive) {
  std::vector<GramVector> w{GramVector{0, {0.0, 0.0}}, GramVector{0, {3.0, 4.0}}};
  const Rdm rdm = compute_rdm(w, ids(2));
  EXPECT_EQ(rdm.at(0, 1), 5.0f);
  EXPECT_EQ(rdm.at(1, 0), 5.0f);
}

TEST(Rdm, SizeFollowsItemCount) {
  std::mt19937_64 rng(1);
  const auto v = random_vectors(300, 3, rng);
  const Rdm rdm = compute_rdm(v, ids(300));
  EXPECT_EQ(rdm.size, 300u);
  EXPECT_EQ(rdm.values.size(), 300u * 300u);
}

TEST(Rdm, EqualsNaiveOracleExactly) {
  std::mt19937_64 rng(2);
  for (std::size_t s : {2, 7, 23, 50}) {
    const auto v = random_vectors(s, 6, rng);
    const Rdm rdm = compute_rdm(v, ids(s), RdmOptions{DistanceVariant::kUpperTriangle, false, 3});
    EXPECT_EQ(rdm.values, fx::naive_rdm(v));
    for (std::size_t a = 0; a < s; ++a) {
      EXPECT_EQ(rdm.at(a, a), 0.0f);
      for (std::size_t b = 0; b < s; ++b) {
        EXPECT_EQ(std::bit_cast<std::uint32_t>(rdm.at(a, b)), std::bit_cast<std::uint32_t>(rdm.at(b, a)));
      }
    }
  }
}

TEST(Rdm, FullFrobeniusMatchesFullMatrixNorm) {
  std::mt19937_64 rng(3);
  const auto v = random_vectors(6, 5, rng);
  const Rdm rdm = compute_rdm(v, ids(6), RdmOptions{DistanceVariant::kFullFrobenius});
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) {
      const GramMatrix ga = gram_devectorize(v[a]), gb = gram_devectorize(v[b]);
      double sum = 0.0;
      for (std::size_t k = 0; k < ga.values.size(); ++k) sum += std::pow(ga.values[k] - gb.values[k], 2);
      EXPECT_NEAR(rdm.at(a, b), std::sqrt(sum), 1e-5 * std::sqrt(sum));
    }
  }
}

TEST(Rdm, StandardizeRemovesScaleAndOffset) {
  std::mt19937_64 rng(4);
  auto v = random_vectors(3, 4, rng);
  GramVector scaled = v[0];
  for (double& x : scaled.values) x = 7.0 * x + 3.0;
  v.push_back(scaled);
  const Rdm rdm = compute_rdm(v, ids(4), RdmOptions{DistanceVariant::kUpperTriangle, true});
  EXPECT_NEAR(rdm.at(0, 3), 0.0f, 1e-5);
  EXPECT_GT(rdm.at(0, 1), 0.1f);
}

TEST(Rdm, Errors) {
  std::mt19937_64 rng(5);
  const auto v = random_vectors(3, 2, rng);
  EXPECT_THROW(compute_rdm(std::span(v).first(1), ids(1)), DataError);
  EXPECT_THROW(compute_rdm(v, ids(2)), DataError);
  auto w = v;
  w[1] = GramVector{3, std::vector<double>(6, 0.0)};
  EXPECT_THROW(compute_rdm(w, ids(3)), DataError);
  w = v;
  w[2].values[0] = std::nan("");
  EXPECT_THROW(compute_rdm(w, ids(3)), NumericalError);
  EXPECT_THROW(parse_distance_variant("cosine"), ConfigError);
  EXPECT_EQ(parse_distance_variant("full-frobenius"), DistanceVariant::kFullFrobenius);
  EXPECT_EQ(to_string(DistanceVariant::kUpperTriangle), "upper-tri");
}

TEST(RdmProperty, TriangleInequality) {
  std::mt19937_64 rng(6);
  const auto v = random_vectors(40, 4, rng);
  const Rdm rdm = compute_rdm(v, ids(40));
  std::uniform_int_distribution<std::size_t> pick(0, 39);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    const double lhs = rdm.at(a, c), rhs = double(rdm.at(a, b)) + rdm.at(b, c);
    EXPECT_LE(lhs, rhs * (1 + 1e-9) + 1e-6);  // float storage rounding
  }
}

TEST(RdmProperty, CoordinatePermutationInvariance) {
  std::mt19937_64 rng(7);
  const auto v = random_vectors(12, 5, rng);
  std::vector<std::size_t> perm(v[0].values.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto p = v;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t k = 0; k < perm.size(); ++k) p[i].values[k] = v[i].values[perm[k]];
  }
  const Rdm a = compute_rdm(v, ids(12)), b = compute_rdm(p, ids(12));
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    EXPECT_NEAR(a.values[i], b.values[i], 1e-6 * std::max(1.0f, a.values[i]));
  }
}

TEST(SortByClass, Permutations) {
  std::mt19937_64 rng(8);
  const auto v = random_vectors(4, 2, rng);
  const Rdm rdm = compute_rdm(v, ids(4));
  std::vector<std::size_t> perm;
  const std::vector<int> sorted_labels{0, 0, 1, 1};
  sort_by_class(rdm, sorted_labels, &perm);
  EXPECT_EQ(perm, (std::vector<std::size_t>{0, 1, 2, 3}));
  const std::vector<int> labels{1, 0, 1, 0};
  const Rdm s = sort_by_class(rdm, labels, &perm);
  EXPECT_EQ(perm, (std::vector<std::size_t>{1, 3, 0, 2}));
  EXPECT_EQ(s.item_ids, (std::vector<std::string>{"item1", "item3", "item0", "item2"}));
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(s.at(a, b), rdm.at(perm[a], perm[b]));
  }
  EXPECT_THROW(sort_by_class(rdm, std::span(labels).first(3)), DataError);
}

TEST(SortByClass, PreservesOffDiagonalMultiset) {
  std::mt19937_64 rng(9);
  const auto v = random_vectors(30, 3, rng);
  const Rdm rdm = compute_rdm(v, ids(30));
  std::vector<int> labels(30);
  std::uniform_int_distribution<int> label(0, 4);
  for (int& l : labels) l = label(rng);
  const Rdm s = sort_by_class(rdm, labels);
  auto off = [](const Rdm& r) {
    std::vector<float> out;
    for (std::size_t a = 0; a < r.size; ++a) {
      for (std::size_t b = 0; b < r.size; ++b) {
        if (a != b) out.push_back(r.at(a, b));
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  EXPECT_EQ(off(s), off(rdm));
}

TEST(RdmFile, SaveLoadRoundTrip) {
  fx::TempDir dir;
  std::mt19937_64 rng(10);
  const auto v = random_vectors(5, 3, rng);
  const Rdm rdm = compute_rdm(v, ids(5));
  save_rdm(dir / "rdm.bin", rdm, RdmSidecar{"relu1", "net", DistanceVariant::kFullFrobenius});
  EXPECT_EQ(std::filesystem::file_size(dir / "rdm.bin"), 4u * 25u);
  RdmSidecar side;
  const Rdm back = load_rdm(dir / "rdm.bin", &side);
  EXPECT_EQ(back.values, rdm.values);
  EXPECT_EQ(back.item_ids, rdm.item_ids);
  EXPECT_EQ(side.layer, "relu1");
  EXPECT_EQ(side.model, "net");
  EXPECT_EQ(side.variant, DistanceVariant::kFullFrobenius);
  std::filesystem::resize_file(dir / "rdm.bin", 4u * 24u);
  EXPECT_THROW(load_rdm(dir / "rdm.bin"), DataError);
}
