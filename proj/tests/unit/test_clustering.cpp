#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "texgram/clustering.hpp"
#include "texgram/error.hpp"
#include "texgram/infotheory.hpp"

namespace fx = texgram::testing;

using namespace texgram;

using fx::brute_force_ward;
using fx::Members;
using fx::Points;
using fx::random_points;

namespace {

std::vector<double> distances(const Points& p) { return fx::pairwise_distances(p); }

std::vector<Members> merge_members(const Dendrogram& tree) { return fx::dendrogram_members(tree); }

}  // namespace

TEST(Ward, SeparatedPairsMergeFirst) {
  const Points p{{0}, {1}, {10}, {11}};
  const Dendrogram tree = ward_linkage(distances(p), 4);
  ASSERT_EQ(tree.merges.size(), 3u);
  EXPECT_EQ(tree.merges[0].left, 0u);
  EXPECT_EQ(tree.merges[0].right, 1u);
  EXPECT_EQ(tree.merges[1].left, 2u);
  EXPECT_EQ(tree.merges[1].right, 3u);
  EXPECT_EQ(tree.merges[2].left, 4u);
  EXPECT_EQ(tree.merges[2].right, 5u);
  EXPECT_EQ(tree.merges[2].size, 4u);
  // sqrt(2 * 2 * 2 / 4) * 10
  EXPECT_NEAR(tree.merges[2].height, std::sqrt(2.0) * 10.0, 1e-12);
  tree.validate();
}

TEST(Ward, TwoItemsMergeAtTheirDistance) {
  const std::vector<double> d{0.0, 2.75, 2.75, 0.0};
  const Dendrogram tree = ward_linkage(d, 2);
  ASSERT_EQ(tree.merges.size(), 1u);
  EXPECT_EQ(tree.merges[0].height, 2.75);
  EXPECT_EQ(tree.merges[0].size, 2u);
}

TEST(Ward, EightPointsMatchExhaustiveOracle) {
  std::mt19937_64 rng(8);
  const Points p = random_points(8, 2, rng);
  const auto oracle = brute_force_ward(p);
  const Dendrogram tree = ward_linkage(distances(p), 8);
  const auto got = merge_members(tree);
  for (std::size_t s = 0; s < oracle.size(); ++s) {
    EXPECT_EQ(got[s], oracle[s].members) << "step " << s;
    EXPECT_NEAR(tree.merges[s].height, oracle[s].height, 1e-9 * oracle[s].height);
  }
}

TEST(Ward, MatchesExhaustiveOracleOnManySmallInstances) {
  std::mt19937_64 rng(100);
  std::uniform_int_distribution<std::size_t> size(2, 10), dim(1, 4);
  for (int instance = 0; instance < 200; ++instance) {
    const Points p = random_points(size(rng), dim(rng), rng);
    const auto oracle = brute_force_ward(p);
    const Dendrogram tree = ward_linkage(distances(p), p.size());
    tree.validate();
    const auto got = merge_members(tree);
    for (std::size_t s = 0; s < oracle.size(); ++s) {
      ASSERT_EQ(got[s], oracle[s].members) << "instance " << instance << " step " << s;
    }
  }
}

TEST(Ward, ChainAndNaiveAgreeAtTwoHundredItems) {
  std::mt19937_64 rng(200);
  const Points p = random_points(200, 5, rng);
  const auto d = distances(p);
  const Dendrogram fast = ward_linkage(d, 200), slow = ward_linkage_naive(d, 200);
  ASSERT_EQ(fast.merges.size(), slow.merges.size());
  for (std::size_t s = 0; s < fast.merges.size(); ++s) {
    EXPECT_NEAR(fast.merges[s].height, slow.merges[s].height, 1e-9 * slow.merges[s].height);
    EXPECT_EQ(fast.merges[s].left, slow.merges[s].left);
    EXPECT_EQ(fast.merges[s].right, slow.merges[s].right);
  }
}

TEST(Ward, HeightsAreNonDecreasing) {
  std::mt19937_64 rng(3);
  const Points p = random_points(60, 3, rng);
  const Dendrogram tree = ward_linkage(distances(p), 60);
  for (std::size_t s = 1; s < tree.merges.size(); ++s) {
    EXPECT_GE(tree.merges[s].height, tree.merges[s - 1].height);
  }
}

TEST(Ward, TiesResolveDeterministically) {
  // Four corners of a unit square: all nearest pairs tie.
  const Points p{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const auto d = distances(p);
  const Dendrogram a = ward_linkage(d, 4), b = ward_linkage_naive(d, 4);
  EXPECT_EQ(a.merges[0].left, 0u);
  EXPECT_EQ(a.merges[0].right, 1u);
  EXPECT_EQ(b.merges[0].left, 0u);
  EXPECT_EQ(b.merges[0].right, 1u);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(a.merges[s].height, b.merges[s].height);
}

TEST(Ward, InputValidation) {
  EXPECT_THROW(ward_linkage(std::vector<double>{0.0}, 1), DataError);
  EXPECT_THROW(ward_linkage(std::vector<double>{0, 1, 1}, 2), DataError);
  EXPECT_THROW(ward_linkage(std::vector<double>{0, -1, -1, 0}, 2), DataError);
  EXPECT_THROW(ward_linkage(std::vector<double>{0, 1, 2, 0}, 2), DataError);
  EXPECT_THROW(ward_linkage(std::vector<double>{0, NAN, NAN, 0}, 2), DataError);
}

TEST(Ward, AcceptsRdm) {
  Rdm rdm{3, {0, 1, 4, 1, 0, 3, 4, 3, 0}, {"a", "b", "c"}};
  const Dendrogram tree = ward_linkage(rdm);
  EXPECT_EQ(tree.merges[0].left, 0u);
  EXPECT_EQ(tree.merges[0].right, 1u);
}

TEST(CutTree, ExtremesAndSeparatedPairs) {
  const Points p{{0}, {1}, {10}, {11}};
  const Dendrogram tree = ward_linkage(distances(p), 4);
  EXPECT_EQ(cut_tree(tree, 4).labels, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(cut_tree(tree, 1).labels, (std::vector<int>{0, 0, 0, 0}));
  const ClusterAssignment two = cut_tree(tree, 2);
  EXPECT_EQ(two.k, 2u);
  EXPECT_EQ(two.labels, (std::vector<int>{0, 0, 1, 1}));
  EXPECT_THROW(cut_tree(tree, 0), DataError);
  EXPECT_THROW(cut_tree(tree, 5), DataError);
}

TEST(CutTree, MatchesOracleClustersAtEveryLevel) {
  std::mt19937_64 rng(11);
  const Points p = random_points(9, 2, rng);
  const auto oracle = brute_force_ward(p);
  const Dendrogram tree = ward_linkage(distances(p), 9);
  for (std::size_t k = 1; k <= 9; ++k) {
    // Replay the oracle's first 9 - k merges.
    std::vector<Members> clusters;
    for (std::size_t i = 0; i < 9; ++i) clusters.push_back({i});
    for (std::size_t s = 0; s < 9 - k; ++s) {
      std::vector<Members> next{oracle[s].members};
      for (const auto& c : clusters) {
        if (!std::includes(oracle[s].members.begin(), oracle[s].members.end(), c.begin(), c.end())) {
          next.push_back(c);
        }
      }
      clusters = next;
    }
    const ClusterAssignment a = cut_tree(tree, k);
    for (const auto& c : clusters) {
      const int label = a.labels[*c.begin()];
      for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(a.labels[i] == label, c.count(i) == 1);
    }
  }
}

TEST(ClusteringProperty, ScalingDistancesScalesHeights) {
  std::mt19937_64 rng(12);
  const Points p = random_points(30, 3, rng);
  const auto d = distances(p);
  const Dendrogram base = ward_linkage(d, 30);
  for (double c : {4.0, 3.0}) {
    std::vector<double> scaled = d;
    for (double& v : scaled) v *= c;
    const Dendrogram s = ward_linkage(scaled, 30);
    for (std::size_t i = 0; i < base.merges.size(); ++i) {
      if (c == 4.0) {
        EXPECT_EQ(s.merges[i].height, c * base.merges[i].height);
      } else {
        EXPECT_NEAR(s.merges[i].height, c * base.merges[i].height, 1e-12 * c * base.merges[i].height);
      }
    }
    for (std::size_t k : {2, 5, 10}) EXPECT_EQ(cut_tree(s, k).labels, cut_tree(base, k).labels);
  }
}

TEST(ClusteringProperty, RelabelingInvarianceViaMutualInformation) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 40, k = 5;
    const Points p = random_points(n, 3, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Points q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = p[perm[i]];
    const auto a = cut_tree(ward_linkage(distances(p), n), k);
    const auto b = cut_tree(ward_linkage(distances(q), n), k);
    std::vector<int> b_in_original(n);
    for (std::size_t i = 0; i < n; ++i) b_in_original[perm[i]] = b.labels[i];
    const ContingencyTable t = contingency_table(a.labels, b_in_original, k, k);
    const double mi = mutual_information(t, EntropyMethod::kPlugin).value;
    const double h = plugin_entropy(t.row_marginals()).value;
    EXPECT_NEAR(mi, h, 1e-12);
  }
}

TEST(ClusteringCsv, Layouts) {
  const Points p{{0}, {1}, {10}};
  const Dendrogram tree = ward_linkage(distances(p), 3);
  const std::string csv = dendrogram_csv(tree);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "merge_index,left,right,height,size");
  EXPECT_NE(csv.find("\n0,0,1,1,2\n"), std::string::npos);
  const std::string a = assignment_csv(cut_tree(tree, 2), {"x", "y", "z"});
  EXPECT_EQ(a, "item_id,cluster\nx,0\ny,0\nz,1\n");
  EXPECT_THROW(assignment_csv(cut_tree(tree, 2), {"x"}), DataError);
}
