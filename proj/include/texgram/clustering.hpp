#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "texgram/rdm.hpp"

namespace texgram {

// One agglomeration step. Items are ids 0..n-1; merge i creates id n + i.
// `left` < `right`; `height` is the Ward distance of the pair; `size` is the
// member count of the new cluster.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double height = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t n_items = 0;
  std::vector<Merge> merges;  // n_items - 1 entries, non-decreasing height

  // Throws DataError on a structurally invalid tree.
  void validate() const;
};

struct ClusterAssignment {
  std::vector<int> labels;  // per item, in [0, k)
  std::size_t k = 0;
};

// Ward linkage on a matrix of Euclidean distances (n x n, row-major) using
// the nearest-neighbour chain over the Lance-Williams recurrence
//   d(k, i+j) = sqrt(((n_i+n_k) d(k,i)^2 + (n_j+n_k) d(k,j)^2 - n_k d(i,j)^2)
//                    / (n_i+n_j+n_k)).
// O(n^2) time and memory. Equal costs resolve towards the lowest index,
// except that the chain predecessor wins a tie (this keeps the chain finite).
Dendrogram ward_linkage(std::span<const double> distances, std::size_t n);
Dendrogram ward_linkage(const Rdm& rdm);

// Reference O(n^3) implementation: repeatedly merges the globally closest
// pair (lexicographically smallest (i, j) on ties).
Dendrogram ward_linkage_naive(std::span<const double> distances, std::size_t n);

// Undoes the last k - 1 merges. Cluster ids are assigned in order of each
// cluster's smallest member index.
ClusterAssignment cut_tree(const Dendrogram& tree, std::size_t k);

// merge_index,left,right,height,size
std::string dendrogram_csv(const Dendrogram& tree);
// item_id,cluster
std::string assignment_csv(const ClusterAssignment& assignment,
                           const std::vector<std::string>& item_ids);

}  // namespace texgram
