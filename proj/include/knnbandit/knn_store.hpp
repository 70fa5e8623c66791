#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace knnbandit {

class DimensionError : public std::invalid_argument {
 public:
  DimensionError(std::size_t expected, std::size_t got)
      : std::invalid_argument("dimension mismatch: store holds " +
                              std::to_string(expected) + "-d points, got " +
                              std::to_string(got)) {}
};

class EmptyStoreError : public std::logic_error {
 public:
  explicit EmptyStoreError(const char* op)
      : std::logic_error(std::string(op) + " called on an empty store") {}
};

struct NeighborEntry {
  std::size_t sample_index = 0;  // insertion index into the store
  double distance = 0.0;         // l2 distance to the query
  double reward = 0.0;           // reward observed with that sample

  bool operator==(const NeighborEntry&) const = default;
};

// Per-action history of (context, reward) pairs with exact k-nearest-neighbor
// queries. Linear scan by design: it is the reference implementation the rest
// of the library is audited against, and per-arm stores stay small enough
// (<= horizon) that the O(n) scan dominates nothing in practice.
class ActionStore {
 public:
  explicit ActionStore(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("ActionStore: dim must be >= 1");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rewards_.size(); }
  bool empty() const { return rewards_.empty(); }

  void insert(std::span<const double> x, double reward) {
    check_dim(x);
    coords_.insert(coords_.end(), x.begin(), x.end());
    rewards_.push_back(reward);
  }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  double reward(std::size_t i) const { return rewards_[i]; }

  double distance(std::size_t i, std::span<const double> q) const {
    const double* p = coords_.data() + i * dim_;
    double s2 = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double d = p[j] - q[j];
      s2 += d * d;
    }
    return std::sqrt(s2);
  }

  // k nearest stored samples, ascending by distance; exact ties broken by
  // insertion index (older first). Returns min(k, size()) entries.
  std::vector<NeighborEntry> knn(std::span<const double> q, std::size_t k) const {
    require_query(q, k, "knn");
    std::vector<NeighborEntry> all = scan(q);
    const std::size_t m = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + m, all.end(), nearer);
    all.resize(m);
    return all;
  }

  // First min(k_max, size()) sorted neighbor distances; rho_j = result[j-1].
  std::vector<double> sorted_distances(std::span<const double> q,
                                       std::size_t k_max) const {
    require_query(q, k_max, "sorted_distances");
    std::vector<double> d(size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = distance(i, q);
    const std::size_t m = std::min(k_max, d.size());
    std::partial_sort(d.begin(), d.begin() + m, d.end());
    d.resize(m);
    return d;
  }

  // rho_1 without sorting; used to cap the adaptive-k search cheaply.
  double min_distance(std::span<const double> q) const {
    if (empty()) throw EmptyStoreError("min_distance");
    check_dim(q);
    double best = distance(0, q);
    for (std::size_t i = 1; i < size(); ++i)
      best = std::min(best, distance(i, q));
    return best;
  }

 private:
  static bool nearer(const NeighborEntry& a, const NeighborEntry& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.sample_index < b.sample_index;
  }

  std::vector<NeighborEntry> scan(std::span<const double> q) const {
    std::vector<NeighborEntry> all(size());
    for (std::size_t i = 0; i < all.size(); ++i)
      all[i] = {i, distance(i, q), rewards_[i]};
    return all;
  }

  void check_dim(std::span<const double> x) const {
    if (x.size() != dim_) throw DimensionError(dim_, x.size());
  }
  void require_query(std::span<const double> q, std::size_t k,
                     const char* op) const {
    if (empty()) throw EmptyStoreError(op);
    check_dim(q);
    if (k == 0)
      throw std::invalid_argument(std::string(op) + ": k must be >= 1");
  }

  std::size_t dim_;
  std::vector<double> coords_;  // flat row-major, dim_ per point
  std::vector<double> rewards_;
};

// Independent oracle for knn(): full scan, stable sort on distance alone.
// Stability reproduces the insertion-index tie rule without encoding it.
inline std::vector<NeighborEntry> brute_knn(const ActionStore& store,
                                            std::span<const double> q,
                                            std::size_t k) {
  if (store.empty()) throw EmptyStoreError("brute_knn");
  if (k == 0) throw std::invalid_argument("brute_knn: k must be >= 1");
  std::vector<NeighborEntry> all(store.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = {i, store.distance(i, q), store.reward(i)};
  std::stable_sort(all.begin(), all.end(),
                   [](const NeighborEntry& a, const NeighborEntry& b) {
                     return a.distance < b.distance;
                   });
  all.resize(std::min(k, all.size()));
  return all;
}

}  // namespace knnbandit
