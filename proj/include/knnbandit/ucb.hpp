#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "knnbandit/knn_store.hpp"

namespace knnbandit {

// Upper confidence value on the extended line: either a finite double or the
// formal +infinity assigned to under-explored arms. A dedicated type (rather
// than IEEE inf) keeps comparisons and tie rules explicit and NaN-proof.
class UcbValue {
 public:
  static UcbValue finite(double v) { return UcbValue{false, v}; }
  static UcbValue infinite() { return UcbValue{true, 0.0}; }

  bool is_infinite() const { return infinite_; }
  double value() const {
    if (infinite_) throw std::logic_error("UcbValue: value() of infinite");
    return value_;
  }

  // Infinite compares above every finite value; two infinites are equal.
  friend bool operator<(const UcbValue& a, const UcbValue& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend bool operator==(const UcbValue& a, const UcbValue& b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }

 private:
  UcbValue(bool inf, double v) : infinite_(inf), value_(v) {}
  bool infinite_;
  double value_;
};

struct PolicyConfig {
  int horizon = 1;        // T, known in advance
  int num_actions = 2;    // |A|
  int dim = 1;            // context dimension d
  double sigma = 0.0;     // subgaussian reward-noise scale
  double lipschitz = 1.0; // L for the mean-reward functions
  double conf_scale = 1.0;  // multiplier on the concentration bonus b
  int k_fixed = 1;        // neighbor count for the fixed-k policy

  void validate() const {
    auto bad = [](const std::string& m) { throw std::invalid_argument("PolicyConfig: " + m); };
    if (horizon < 1) bad("horizon must be >= 1");
    if (num_actions < 1) bad("num_actions must be >= 1");
    if (dim < 1) bad("dim must be >= 1");
    if (!(sigma >= 0.0)) bad("sigma must be >= 0");
    if (!(lipschitz > 0.0)) bad("lipschitz must be > 0");
    if (!(conf_scale > 0.0)) bad("conf_scale must be > 0");
    if (k_fixed < 1) bad("k_fixed must be >= 1");
  }
};

// Mutable per-episode state shared by the knn policies: one store per action
// plus the 1-based step counter t.
struct PolicyState {
  std::vector<ActionStore> stores;
  int step = 1;

  PolicyState(int num_actions, int dim) {
    stores.reserve(static_cast<std::size_t>(num_actions));
    for (int a = 0; a < num_actions; ++a)
      stores.emplace_back(static_cast<std::size_t>(dim));
  }
  std::size_t pulls(int a) const { return stores[static_cast<std::size_t>(a)].size(); }
};

// ln(d * T^(2d+2) * |A|), assembled in log space: at MNIST scale (d = 784)
// T^(2d+2) overflows double range by hundreds of orders of magnitude.
inline double fixed_log_term(const PolicyConfig& c) {
  return std::log(static_cast<double>(c.dim)) +
         (2.0 * c.dim + 2.0) * std::log(static_cast<double>(c.horizon)) +
         std::log(static_cast<double>(c.num_actions));
}

// ln(d * T^(2d+3) * |A|); the adaptive bound carries one extra power of T.
inline double adaptive_log_term(const PolicyConfig& c) {
  return std::log(static_cast<double>(c.dim)) +
         (2.0 * c.dim + 3.0) * std::log(static_cast<double>(c.horizon)) +
         std::log(static_cast<double>(c.num_actions));
}

// b = conf_scale * sqrt((2 sigma^2 / k) * ln(d T^(2d+2) |A|))
inline double fixed_b(const PolicyConfig& c) {
  c.validate();
  const double lt = fixed_log_term(c);
  if (!(lt > 0.0))
    throw std::invalid_argument("fixed_b: d*T^(2d+2)*|A| must exceed 1");
  return c.conf_scale * std::sqrt(2.0 * c.sigma * c.sigma / c.k_fixed * lt);
}

// b_k = conf_scale * sqrt((2 sigma^2 / k) * ln(d T^(2d+3) |A|))
inline double adaptive_b(const PolicyConfig& c, int k) {
  c.validate();
  if (k < 1) throw std::invalid_argument("adaptive_b: k must be >= 1");
  const double lt = adaptive_log_term(c);
  if (!(lt > 0.0))
    throw std::invalid_argument("adaptive_b: d*T^(2d+3)*|A| must exceed 1");
  return c.conf_scale * std::sqrt(2.0 * c.sigma * c.sigma / k * lt);
}

// Fixed-k index: infinite until the arm has k samples, then
//   mean of the k nearest rewards + b + L * rho_k.
inline UcbValue fixed_ucb(const PolicyConfig& c, const PolicyState& s, int a,
                          std::span<const double> x) {
  const ActionStore& store = s.stores[static_cast<std::size_t>(a)];
  const std::size_t k = static_cast<std::size_t>(c.k_fixed);
  if (store.size() < k) return UcbValue::infinite();
  const std::vector<NeighborEntry> nn = store.knn(x, k);
  double mean = 0.0;
  for (const NeighborEntry& e : nn) mean += e.reward;
  mean /= static_cast<double>(k);
  const double rho_k = nn.back().distance;
  return UcbValue::finite(mean + fixed_b(c) + c.lipschitz * rho_k);
}

// Largest k with L * rho_k(x) <= sqrt(ln T / k), capped at the store size.
// The feasible set is a prefix of {1, 2, ...}: rho_k is nondecreasing in k
// while the threshold decreases, so the maximum is found by scanning until the
// inequality first fails. Returns nullopt when the store is empty or even
// k = 1 is infeasible (caller then treats the arm as unexplored).
inline std::optional<int> adaptive_select_k(const PolicyConfig& c,
                                            const PolicyState& s, int a,
                                            std::span<const double> x) {
  c.validate();
  const ActionStore& store = s.stores[static_cast<std::size_t>(a)];
  if (store.empty()) return std::nullopt;
  const double ln_t = std::log(static_cast<double>(c.horizon));
  // Feasibility at k requires k <= ln T / (L rho_k)^2 <= ln T / (L rho_1)^2,
  // which bounds how many sorted distances are worth computing.
  const double rho_1 = store.min_distance(x);
  std::size_t cap = store.size();
  if (rho_1 > 0.0) {
    const double lr = c.lipschitz * rho_1;
    const double k_bound = ln_t / (lr * lr);
    if (!(k_bound >= 1.0)) return std::nullopt;
    if (k_bound < static_cast<double>(cap))
      cap = static_cast<std::size_t>(k_bound);
  }
  const std::vector<double> rho = store.sorted_distances(x, cap);
  int best = 0;
  for (std::size_t j = 1; j <= rho.size(); ++j) {
    const double thresh = std::sqrt(ln_t / static_cast<double>(j));
    if (c.lipschitz * rho[j - 1] <= thresh)
      best = static_cast<int>(j);
    else
      break;
  }
  if (best == 0) return std::nullopt;
  return best;
}

// Adaptive index: infinite when no feasible k exists, otherwise the fixed-k
// index at the selected k with the T^(2d+3) log term.
inline UcbValue adaptive_ucb(const PolicyConfig& c, const PolicyState& s, int a,
                             std::span<const double> x) {
  const std::optional<int> k = adaptive_select_k(c, s, a, x);
  if (!k) return UcbValue::infinite();
  const ActionStore& store = s.stores[static_cast<std::size_t>(a)];
  const std::vector<NeighborEntry> nn =
      store.knn(x, static_cast<std::size_t>(*k));
  double mean = 0.0;
  for (const NeighborEntry& e : nn) mean += e.reward;
  mean /= static_cast<double>(*k);
  const double rho_k = nn.back().distance;
  return UcbValue::finite(mean + adaptive_b(c, *k) + c.lipschitz * rho_k);
}

// Argmax with deterministic ties: infinite beats finite, equal values resolve
// to the lowest action index. Under the fixed-k policy this makes the forced
// exploration pull arm 0 k times, then arm 1 k times, and so on.
inline std::size_t choose_action(std::span<const UcbValue> values) {
  if (values.empty())
    throw std::invalid_argument("choose_action: empty value list");
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a)
    if (values[best] < values[a]) best = a;
  return best;
}

}  // namespace knnbandit
