#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "knnbandit/policy.hpp"

namespace knnbandit {

struct UcbogramConfig {
  int num_actions = 2;
  int dim = 1;
  int bins_per_dim = 8;      // M uniform bins along each clipped coordinate
  double clip_radius = 3.0;  // contexts clamped into [-R, R]^d before binning

  void validate() const {
    if (num_actions < 1)
      throw std::invalid_argument("ucbogram: num_actions must be >= 1");
    if (dim < 1) throw std::invalid_argument("ucbogram: dim must be >= 1");
    if (bins_per_dim < 1)
      throw std::invalid_argument("ucbogram: bins_per_dim must be >= 1");
    if (!(clip_radius > 0.0))
      throw std::invalid_argument("ucbogram: clip_radius must be > 0");
  }
};

// UCBogram: partition the clipped context box into M^d congruent cells and run
// an independent UCB1 instance inside each cell. The classical nonparametric
// baseline the knn policies are measured against; its fixed grid is what the
// unbounded-support experiments defeat.
class UcbogramPolicy : public Policy {
 public:
  explicit UcbogramPolicy(const UcbogramConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
  }

  // Flat cell id; exposed for tests. Clamping maps outliers onto the boundary
  // cells, so the histogram sees every context somewhere.
  static std::size_t bin_index(std::span<const double> x, int bins_per_dim,
                               double clip_radius) {
    const double width = 2.0 * clip_radius / bins_per_dim;
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (double xj : x) {
      const double c = std::clamp(xj, -clip_radius, clip_radius);
      int idx = static_cast<int>(std::floor((c + clip_radius) / width));
      idx = std::clamp(idx, 0, bins_per_dim - 1);
      flat += stride * static_cast<std::size_t>(idx);
      stride *= static_cast<std::size_t>(bins_per_dim);
    }
    return flat;
  }

  const UcbogramConfig& config() const { return cfg_; }

 protected:
  int do_act(std::span<const double> x) override {
    if (x.size() != static_cast<std::size_t>(cfg_.dim))
      throw DimensionError(static_cast<std::size_t>(cfg_.dim), x.size());
    const Cell& cell = cell_for(x);
    // Unpulled arms first (lowest index), then the UCB1 rule.
    for (int a = 0; a < cfg_.num_actions; ++a)
      if (cell.pulls[static_cast<std::size_t>(a)] == 0) return a;
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    const double ln_n = std::log(static_cast<double>(cell.total));
    for (int a = 0; a < cfg_.num_actions; ++a) {
      const auto ai = static_cast<std::size_t>(a);
      const double n_a = static_cast<double>(cell.pulls[ai]);
      const double v = cell.sums[ai] / n_a + std::sqrt(2.0 * ln_n / n_a);
      if (v > best_v) {
        best = a;
        best_v = v;
      }
    }
    return best;
  }

  void do_observe(std::span<const double> x, int action,
                  double reward) override {
    Cell& cell = cell_for(x);
    cell.pulls[static_cast<std::size_t>(action)] += 1;
    cell.sums[static_cast<std::size_t>(action)] += reward;
    cell.total += 1;
  }

 private:
  struct Cell {
    std::vector<long> pulls;
    std::vector<double> sums;
    long total = 0;
  };

  Cell& cell_for(std::span<const double> x) {
    const std::size_t id = bin_index(x, cfg_.bins_per_dim, cfg_.clip_radius);
    auto [it, inserted] = cells_.try_emplace(id);
    if (inserted) {
      it->second.pulls.assign(static_cast<std::size_t>(cfg_.num_actions), 0);
      it->second.sums.assign(static_cast<std::size_t>(cfg_.num_actions), 0.0);
    }
    return it->second;
  }

  UcbogramConfig cfg_;
  std::unordered_map<std::size_t, Cell> cells_;
};

struct AbseConfig {
  int num_actions = 2;
  int dim = 1;
  int horizon = 1;           // T, used in the confidence widths
  int max_depth = 4;         // deepest refinement level of the bin tree
  double conf_c = 2.0;       // c in the width sqrt(c ln T / n)
  double clip_radius = 3.0;  // root box is [-R, R]^d
  double lipschitz = 1.0;    // L, drives the per-depth pull schedule

  void validate() const {
    if (num_actions < 1)
      throw std::invalid_argument("abse: num_actions must be >= 1");
    if (dim < 1 || dim > 16)
      throw std::invalid_argument("abse: dim must lie in [1, 16]");
    if (horizon < 1) throw std::invalid_argument("abse: horizon must be >= 1");
    if (max_depth < 0 || max_depth > 24)
      throw std::invalid_argument("abse: max_depth must lie in [0, 24]");
    if (!(conf_c > 0.0)) throw std::invalid_argument("abse: conf_c must be > 0");
    if (!(clip_radius > 0.0))
      throw std::invalid_argument("abse: clip_radius must be > 0");
    if (!(lipschitz > 0.0))
      throw std::invalid_argument("abse: lipschitz must be > 0");
  }
};

// Adaptively binned successive elimination. Each cell of the (dyadically
// refined) clipped box runs successive elimination over the surviving arms;
// once every survivor has enough pulls for the cell's scale, the cell splits
// into 2^d children that inherit the survivor set and restart statistics.
class AbsePolicy : public Policy {
 public:
  explicit AbsePolicy(const AbseConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Node root;
    root.depth = 0;
    root.center.assign(static_cast<std::size_t>(cfg_.dim), 0.0);
    root.half = cfg_.clip_radius;
    root.survivors.resize(static_cast<std::size_t>(cfg_.num_actions));
    for (int a = 0; a < cfg_.num_actions; ++a)
      root.survivors[static_cast<std::size_t>(a)] = a;
    init_stats(root);
    nodes_.push_back(std::move(root));
  }

  const AbseConfig& config() const { return cfg_; }
  std::size_t node_count() const { return nodes_.size(); }

  // Minimum pulls per surviving arm before a depth-l cell may split:
  // ceil(c ln T / (L diam_l)^2) with diam_l the cell diameter 2 R sqrt(d) 2^-l.
  long split_threshold(int depth) const {
    const double diam = 2.0 * cfg_.clip_radius *
                        std::sqrt(static_cast<double>(cfg_.dim)) /
                        std::pow(2.0, depth);
    const double n = std::ceil(cfg_.conf_c * ln_horizon() /
                               (cfg_.lipschitz * diam * cfg_.lipschitz * diam));
    if (n < 1.0) return 1;
    if (n > static_cast<double>(cfg_.horizon))
      return static_cast<long>(cfg_.horizon);
    return static_cast<long>(n);
  }

 protected:
  int do_act(std::span<const double> x) override {
    if (x.size() != static_cast<std::size_t>(cfg_.dim))
      throw DimensionError(static_cast<std::size_t>(cfg_.dim), x.size());
    Node& leaf = nodes_[leaf_for(x)];
    if (leaf.survivors.size() == 1) return leaf.survivors.front();
    // Round-robin over survivors: least-pulled first, ties to the lowest id.
    int best = leaf.survivors.front();
    long best_pulls = leaf.pulls[static_cast<std::size_t>(best)];
    for (int a : leaf.survivors) {
      const long p = leaf.pulls[static_cast<std::size_t>(a)];
      if (p < best_pulls) {
        best = a;
        best_pulls = p;
      }
    }
    return best;
  }

  void do_observe(std::span<const double> x, int action,
                  double reward) override {
    const std::size_t li = leaf_for(x);
    {
      Node& leaf = nodes_[li];
      leaf.pulls[static_cast<std::size_t>(action)] += 1;
      leaf.sums[static_cast<std::size_t>(action)] += reward;
      eliminate(leaf);
    }
    maybe_split(li);  // may reallocate nodes_
  }

 private:
  struct Node {
    int depth = 0;
    std::vector<double> center;
    double half = 0.0;  // half-width of the cell along every axis
    std::vector<int> survivors;
    std::vector<long> pulls;   // indexed by arm id
    std::vector<double> sums;  // indexed by arm id
    std::vector<std::size_t> children;  // empty or exactly 2^dim entries
  };

  double ln_horizon() const {
    return std::log(static_cast<double>(std::max(cfg_.horizon, 2)));
  }

  void init_stats(Node& n) const {
    n.pulls.assign(static_cast<std::size_t>(cfg_.num_actions), 0);
    n.sums.assign(static_cast<std::size_t>(cfg_.num_actions), 0.0);
  }

  std::size_t leaf_for(std::span<const double> x) const {
    std::size_t i = 0;
    while (!nodes_[i].children.empty()) {
      const Node& n = nodes_[i];
      std::size_t child = 0;
      for (int j = 0; j < cfg_.dim; ++j) {
        const double c = std::clamp(x[static_cast<std::size_t>(j)],
                                    -cfg_.clip_radius, cfg_.clip_radius);
        if (c >= n.center[static_cast<std::size_t>(j)])
          child |= (std::size_t{1} << j);
      }
      i = n.children[child];
    }
    return i;
  }

  // Drop every survivor whose upper bound falls below the best lower bound.
  // Arms not yet pulled in this cell carry no bound and cannot be eliminated
  // (nor eliminate others).
  void eliminate(Node& leaf) {
    if (leaf.survivors.size() <= 1) return;
    double best_lb = -std::numeric_limits<double>::infinity();
    for (int a : leaf.survivors) {
      const auto ai = static_cast<std::size_t>(a);
      if (leaf.pulls[ai] == 0) continue;
      const double n = static_cast<double>(leaf.pulls[ai]);
      const double w = std::sqrt(cfg_.conf_c * ln_horizon() / n);
      best_lb = std::max(best_lb, leaf.sums[ai] / n - w);
    }
    std::vector<int> kept;
    kept.reserve(leaf.survivors.size());
    for (int a : leaf.survivors) {
      const auto ai = static_cast<std::size_t>(a);
      if (leaf.pulls[ai] == 0) {
        kept.push_back(a);
        continue;
      }
      const double n = static_cast<double>(leaf.pulls[ai]);
      const double w = std::sqrt(cfg_.conf_c * ln_horizon() / n);
      if (leaf.sums[ai] / n + w >= best_lb) kept.push_back(a);
    }
    if (!kept.empty()) leaf.survivors = std::move(kept);
  }

  void maybe_split(std::size_t li) {
    {
      const Node& leaf = nodes_[li];
      if (leaf.survivors.size() <= 1 || leaf.depth >= cfg_.max_depth) return;
      const long need = split_threshold(leaf.depth);
      for (int a : leaf.survivors)
        if (leaf.pulls[static_cast<std::size_t>(a)] < need) return;
    }
    const std::size_t n_children = std::size_t{1} << cfg_.dim;
    std::vector<std::size_t> child_ids;
    child_ids.reserve(n_children);
    for (std::size_t c = 0; c < n_children; ++c) {
      Node child;
      const Node& leaf = nodes_[li];  // re-read: push_back below reallocates
      child.depth = leaf.depth + 1;
      child.half = leaf.half / 2.0;
      child.center = leaf.center;
      for (int j = 0; j < cfg_.dim; ++j) {
        const double off = (c >> j) & 1 ? child.half : -child.half;
        child.center[static_cast<std::size_t>(j)] += off;
      }
      child.survivors = leaf.survivors;
      init_stats(child);
      child_ids.push_back(nodes_.size());
      nodes_.push_back(std::move(child));
    }
    nodes_[li].children = std::move(child_ids);
  }

  AbseConfig cfg_;
  std::vector<Node> nodes_;  // nodes_[0] is the root
};

}  // namespace knnbandit
