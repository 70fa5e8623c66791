#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "knnbandit/rng.hpp"
#include "knnbandit/ucb.hpp"

namespace knnbandit {

class ProtocolError : public std::logic_error {
  using std::logic_error::logic_error;
};

// Bandit policy interface with a strict act/observe alternation guard. The
// guard lives in the base so every implementation (and every caller, including
// the regret harness) is held to the same contract: act(x) then observe(x, a, y)
// for the identical context and chosen action, once per step.
class Policy {
 public:
  virtual ~Policy() = default;

  int act(std::span<const double> x) {
    if (pending_)
      throw ProtocolError("Policy::act called twice without observe");
    pending_x_.assign(x.begin(), x.end());
    pending_a_ = do_act(x);
    pending_ = true;
    return pending_a_;
  }

  void observe(std::span<const double> x, int action, double reward) {
    if (!pending_)
      throw ProtocolError("Policy::observe called without a pending act");
    if (action != pending_a_)
      throw ProtocolError("Policy::observe: action " + std::to_string(action) +
                          " does not match chosen action " +
                          std::to_string(pending_a_));
    if (!std::equal(x.begin(), x.end(), pending_x_.begin(), pending_x_.end()))
      throw ProtocolError("Policy::observe: context differs from acted context");
    do_observe(x, action, reward);
    pending_ = false;
    ++steps_;
  }

  // Completed act/observe rounds; a fresh policy reports 0.
  int steps_taken() const { return steps_; }

 protected:
  virtual int do_act(std::span<const double> x) = 0;
  virtual void do_observe(std::span<const double> x, int action,
                          double reward) = 0;

 private:
  bool pending_ = false;
  std::vector<double> pending_x_;
  int pending_a_ = -1;
  int steps_ = 0;
};

// k-NN UCB with a fixed neighbor count.
class FixedKnnPolicy : public Policy {
 public:
  explicit FixedKnnPolicy(const PolicyConfig& cfg)
      : cfg_(cfg), state_(cfg.num_actions, cfg.dim) {
    cfg_.validate();
  }

  std::vector<UcbValue> ucb_values(std::span<const double> x) const {
    std::vector<UcbValue> v;
    v.reserve(static_cast<std::size_t>(cfg_.num_actions));
    for (int a = 0; a < cfg_.num_actions; ++a)
      v.push_back(fixed_ucb(cfg_, state_, a, x));
    return v;
  }

  const PolicyConfig& config() const { return cfg_; }
  const PolicyState& state() const { return state_; }

 protected:
  int do_act(std::span<const double> x) override {
    const std::vector<UcbValue> v = ucb_values(x);
    return static_cast<int>(choose_action(v));
  }
  void do_observe(std::span<const double> x, int action,
                  double reward) override {
    state_.stores[static_cast<std::size_t>(action)].insert(x, reward);
    ++state_.step;
  }

 private:
  PolicyConfig cfg_;
  PolicyState state_;
};

// k-NN UCB with the per-arm data-driven neighbor count.
class AdaptiveKnnPolicy : public Policy {
 public:
  explicit AdaptiveKnnPolicy(const PolicyConfig& cfg)
      : cfg_(cfg), state_(cfg.num_actions, cfg.dim) {
    cfg_.validate();
  }

  std::vector<UcbValue> ucb_values(std::span<const double> x) const {
    std::vector<UcbValue> v;
    v.reserve(static_cast<std::size_t>(cfg_.num_actions));
    for (int a = 0; a < cfg_.num_actions; ++a)
      v.push_back(adaptive_ucb(cfg_, state_, a, x));
    return v;
  }

  const PolicyConfig& config() const { return cfg_; }
  const PolicyState& state() const { return state_; }

 protected:
  int do_act(std::span<const double> x) override {
    const std::vector<UcbValue> v = ucb_values(x);
    return static_cast<int>(choose_action(v));
  }
  void do_observe(std::span<const double> x, int action,
                  double reward) override {
    state_.stores[static_cast<std::size_t>(action)].insert(x, reward);
    ++state_.step;
  }

 private:
  PolicyConfig cfg_;
  PolicyState state_;
};

// Clairvoyant baseline: plays argmax_a eta_a(x) using the true means, ties to
// the lowest index. Lower-bounds the regret of any learner (0 by definition).
class OraclePolicy : public Policy {
 public:
  OraclePolicy(int num_actions, std::function<double(int, std::span<const double>)> eta)
      : num_actions_(num_actions), eta_(std::move(eta)) {
    if (num_actions_ < 1)
      throw std::invalid_argument("OraclePolicy: num_actions must be >= 1");
    if (!eta_) throw std::invalid_argument("OraclePolicy: eta is empty");
  }

 protected:
  int do_act(std::span<const double> x) override {
    int best = 0;
    double best_v = eta_(0, x);
    for (int a = 1; a < num_actions_; ++a) {
      const double v = eta_(a, x);
      if (v > best_v) {
        best = a;
        best_v = v;
      }
    }
    return best;
  }
  void do_observe(std::span<const double>, int, double) override {}

 private:
  int num_actions_;
  std::function<double(int, std::span<const double>)> eta_;
};

// Uniform-random baseline; upper anchor for regret curves.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(int num_actions, std::uint64_t seed)
      : num_actions_(num_actions), rng_(seed) {
    if (num_actions_ < 1)
      throw std::invalid_argument("RandomPolicy: num_actions must be >= 1");
  }

 protected:
  int do_act(std::span<const double>) override {
    std::uniform_int_distribution<int> pick(0, num_actions_ - 1);
    return pick(rng_);
  }
  void do_observe(std::span<const double>, int, double) override {}

 private:
  int num_actions_;
  Rng rng_;
};

}  // namespace knnbandit
