#include "texgram/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "texgram/error.hpp"

namespace texgram {

namespace {

void validate_distances(std::span<const double> d, std::size_t n) {
  if (n < 2) throw DataError("clustering needs at least two items");
  if (d.size() != n * n) throw DataError("distance matrix is not n x n");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = d[i * n + j];
      if (!std::isfinite(v)) throw DataError("distance matrix has non-finite entries");
      if (v < 0.0) throw DataError("distance matrix has negative entries");
      if (v != d[j * n + i]) throw DataError("distance matrix is not symmetric");
    }
  }
}

// Condensed upper-triangle storage of squared distances.
class CondensedMatrix {
 public:
  CondensedMatrix(std::span<const double> d, std::size_t n)
      : n_(n), values_(n * (n - 1) / 2) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = d[i * n + j];
        values_[index(i, j)] = v * v;
      }
    }
  }
  double& operator()(std::size_t i, std::size_t j) {
    return i < j ? values_[index(i, j)] : values_[index(j, i)];
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    return i * n_ - i * (i + 1) / 2 + j - i - 1;
  }
  std::size_t n_;
  std::vector<double> values_;
};

double ward_update(double d_ki, double d_kj, double d_ij, double n_i, double n_j, double n_k) {
  const double v = ((n_i + n_k) * d_ki + (n_j + n_k) * d_kj - n_k * d_ij) / (n_i + n_j + n_k);
  return v > 0.0 ? v : 0.0;
}

// Merge recorded on storage slots; a slot stands for whatever cluster
// currently occupies it.
struct SlotMerge {
  std::size_t a, b;
  double height;
};

// Sorts by height (stable) and translates slots to scipy-style cluster ids.
Dendrogram relabel(std::vector<SlotMerge> merges, std::size_t n) {
  std::stable_sort(merges.begin(), merges.end(),
                   [](const SlotMerge& x, const SlotMerge& y) { return x.height < y.height; });
  std::vector<std::size_t> parent(n), node_id(n), size(n, 1);
  std::iota(parent.begin(), parent.end(), 0);
  std::iota(node_id.begin(), node_id.end(), 0);
  const auto find = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  Dendrogram tree{n, {}};
  tree.merges.reserve(n - 1);
  for (std::size_t step = 0; step < merges.size(); ++step) {
    const std::size_t ra = find(merges[step].a);
    const std::size_t rb = find(merges[step].b);
    const std::size_t ia = node_id[ra];
    const std::size_t ib = node_id[rb];
    parent[rb] = ra;
    size[ra] += size[rb];
    node_id[ra] = n + step;
    tree.merges.push_back({std::min(ia, ib), std::max(ia, ib), merges[step].height, size[ra]});
  }
  return tree;
}

}  // namespace

void Dendrogram::validate() const {
  if (n_items < 1) throw DataError("dendrogram has no items");
  if (merges.size() + 1 != n_items) throw DataError("dendrogram needs n_items - 1 merges");
  std::vector<bool> used(2 * n_items - 1, false);
  std::vector<std::size_t> size(2 * n_items - 1, 1);
  for (std::size_t i = 0; i < merges.size(); ++i) {
    const Merge& m = merges[i];
    for (std::size_t child : {m.left, m.right}) {
      if (child >= n_items + i || used[child]) {
        throw DataError("dendrogram merge " + std::to_string(i) + " has an invalid child");
      }
      used[child] = true;
    }
    if (m.left == m.right) throw DataError("dendrogram merge joins a cluster with itself");
    if (!(m.height >= 0.0)) throw DataError("dendrogram merge height is negative");
    size[n_items + i] = size[m.left] + size[m.right];
    if (m.size != size[n_items + i]) throw DataError("dendrogram cluster sizes are inconsistent");
  }
}

Dendrogram ward_linkage(std::span<const double> distances, std::size_t n) {
  validate_distances(distances, n);
  CondensedMatrix d(distances, n);
  std::vector<double> members(n, 1.0);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> chain;
  chain.reserve(n);
  std::vector<SlotMerge> merges;
  merges.reserve(n - 1);

  std::size_t first_active = 0;
  while (merges.size() + 1 < n) {
    if (chain.empty()) {
      while (!active[first_active]) ++first_active;
      chain.push_back(first_active);
    }
    while (true) {
      const std::size_t a = chain.back();
      std::size_t best = std::numeric_limits<std::size_t>::max();
      double best_d = std::numeric_limits<double>::infinity();
      if (chain.size() >= 2) {
        best = chain[chain.size() - 2];
        best_d = d(a, best);
      }
      for (std::size_t b = 0; b < n; ++b) {
        if (b == a || !active[b]) continue;
        const double v = d(a, b);
        if (v < best_d || (v == best_d && b < best && chain.size() < 2)) {
          best = b;
          best_d = v;
        }
      }
      if (chain.size() >= 2 && best == chain[chain.size() - 2]) break;
      chain.push_back(best);
    }

    // Reciprocal nearest neighbours: merge into the lower slot.
    const std::size_t x = chain.back();
    chain.pop_back();
    const std::size_t y = chain.back();
    chain.pop_back();
    const std::size_t lo = std::min(x, y);
    const std::size_t hi = std::max(x, y);
    const double d_lohi = d(lo, hi);
    merges.push_back({lo, hi, std::sqrt(d_lohi)});

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == lo || k == hi) continue;
      d(k, lo) = ward_update(d(k, lo), d(k, hi), d_lohi, members[lo], members[hi], members[k]);
    }
    members[lo] += members[hi];
    active[hi] = false;
  }
  return relabel(std::move(merges), n);
}

Dendrogram ward_linkage(const Rdm& rdm) {
  return ward_linkage(std::vector<double>(rdm.values.begin(), rdm.values.end()), rdm.size);
}

Dendrogram ward_linkage_naive(std::span<const double> distances, std::size_t n) {
  validate_distances(distances, n);
  CondensedMatrix d(distances, n);
  std::vector<double> members(n, 1.0);
  std::vector<bool> active(n, true);
  std::vector<SlotMerge> merges;

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    merges.push_back({bi, bj, std::sqrt(best)});
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      d(k, bi) = ward_update(d(k, bi), d(k, bj), best, members[bi], members[bj], members[k]);
    }
    members[bi] += members[bj];
    active[bj] = false;
  }
  return relabel(std::move(merges), n);
}

ClusterAssignment cut_tree(const Dendrogram& tree, std::size_t k) {
  const std::size_t n = tree.n_items;
  if (k < 1 || k > n) {
    throw DataError("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(n) +
                    "]");
  }
  tree.validate();
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i + k < n; ++i) {
    parent[tree.merges[i].left] = n + i;
    parent[tree.merges[i].right] = n + i;
  }
  const auto root = [&parent](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };

  ClusterAssignment out{std::vector<int>(n, -1), k};
  std::vector<int> label_of_root(2 * n - 1, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = root(i);
    if (label_of_root[r] < 0) label_of_root[r] = next++;
    out.labels[i] = label_of_root[r];
  }
  return out;
}

std::string dendrogram_csv(const Dendrogram& tree) {
  std::ostringstream csv;
  csv.precision(17);
  csv << "merge_index,left,right,height,size\n";
  for (std::size_t i = 0; i < tree.merges.size(); ++i) {
    const Merge& m = tree.merges[i];
    csv << i << ',' << m.left << ',' << m.right << ',' << m.height << ',' << m.size << '\n';
  }
  return csv.str();
}

std::string assignment_csv(const ClusterAssignment& assignment,
                           const std::vector<std::string>& item_ids) {
  if (item_ids.size() != assignment.labels.size()) {
    throw DataError("item id count does not match the assignment");
  }
  std::ostringstream csv;
  csv << "item_id,cluster\n";
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    csv << item_ids[i] << ',' << assignment.labels[i] << '\n';
  }
  return csv.str();
}

}  // namespace texgram
