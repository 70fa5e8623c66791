#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "knnbandit/environments.hpp"
#include "knnbandit/policy.hpp"
#include "knnbandit/rng.hpp"

namespace knnbandit {

struct RegretTrace {
  std::vector<int> actions;        // chosen action per step
  std::vector<double> inst_regret; // eta*(x_t) - eta_{a_t}(x_t)
  std::vector<double> cum_regret;  // running sum of inst_regret
};

// One bandit episode: contexts and rewards from `env` driven by `seed`,
// decisions from `policy`. The policy must be fresh (zero completed steps).
// Regret uses the true means, not the noisy rewards.
inline RegretTrace run_trial(Environment& env, Policy& policy, int horizon,
                             std::uint64_t seed) {
  if (horizon < 1) throw std::invalid_argument("run_trial: horizon must be >= 1");
  if (policy.steps_taken() != 0)
    throw ProtocolError("run_trial: policy has already been stepped");
  Rng rng(seed);
  RegretTrace trace;
  trace.actions.reserve(static_cast<std::size_t>(horizon));
  trace.inst_regret.reserve(static_cast<std::size_t>(horizon));
  trace.cum_regret.reserve(static_cast<std::size_t>(horizon));
  double cum = 0.0;
  for (int t = 0; t < horizon; ++t) {
    const std::vector<double> x = env.sample_context(rng);
    const int a = policy.act(x);
    if (a < 0 || static_cast<std::size_t>(a) >= env.num_actions())
      throw std::out_of_range("run_trial: policy chose action " +
                              std::to_string(a));
    const double y = env.sample_reward(static_cast<std::size_t>(a), x, rng);
    policy.observe(x, a, y);
    const double inst =
        env.optimal_reward(x) - env.mean_reward(static_cast<std::size_t>(a), x);
    cum += inst;
    trace.actions.push_back(a);
    trace.inst_regret.push_back(inst);
    trace.cum_regret.push_back(cum);
  }
  return trace;
}

struct AggregateResult {
  std::vector<double> mean_cum_regret;  // per step, across trials
  std::vector<double> std_cum_regret;   // sample std (divisor m-1; 0 if m = 1)
  int n_trials = 0;
};

// Experiment = independent trials of the same (env, policy) pair under the
// deterministic seed tree: trial i uses trial_seed = derive_seed(master, i),
// env stream derive_seed(trial_seed, 0), policy stream derive_seed(trial_seed, 1).
struct ExperimentPlan {
  std::function<std::unique_ptr<Environment>()> make_env;
  std::function<std::unique_ptr<Policy>(Environment&, std::uint64_t)> make_policy;
  int horizon = 1;
  int n_trials = 1;
  std::uint64_t master_seed = 0;
  int threads = 1;
  bool keep_traces = false;  // retain per-trial traces in the result
};

struct ExperimentResult {
  AggregateResult aggregate;
  std::vector<RegretTrace> traces;  // empty unless keep_traces
};

// Runs the trials, optionally across worker threads. Results are identical
// for any thread count: each trial derives its own seeds from the trial index
// alone, and aggregation runs serially in trial order after all workers join.
inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
  if (!plan.make_env || !plan.make_policy)
    throw std::invalid_argument("run_experiment: missing factory");
  if (plan.horizon < 1)
    throw std::invalid_argument("run_experiment: horizon must be >= 1");
  if (plan.n_trials < 1)
    throw std::invalid_argument("run_experiment: n_trials must be >= 1");
  if (plan.threads < 1)
    throw std::invalid_argument("run_experiment: threads must be >= 1");

  const std::size_t m = static_cast<std::size_t>(plan.n_trials);
  std::vector<RegretTrace> traces(m);

  auto run_one = [&](std::size_t i) {
    const std::uint64_t trial_seed = derive_seed(plan.master_seed, i);
    const std::uint64_t env_seed = derive_seed(trial_seed, 0);
    const std::uint64_t policy_seed = derive_seed(trial_seed, 1);
    std::unique_ptr<Environment> env = plan.make_env();
    std::unique_ptr<Policy> policy = plan.make_policy(*env, policy_seed);
    traces[i] = run_trial(*env, *policy, plan.horizon, env_seed);
  };

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(plan.threads), m);
  if (workers <= 1) {
    for (std::size_t i = 0; i < m; ++i) {
      try {
        run_one(i);
      } catch (const std::exception& e) {
        throw std::runtime_error("trial " + std::to_string(i) +
                                 " failed: " + e.what());
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::size_t err_trial = 0;
    std::exception_ptr err;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= m) return;
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) {
            err = std::current_exception();
            err_trial = i;
          }
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (err) {
      try {
        std::rethrow_exception(err);
      } catch (const std::exception& e) {
        throw std::runtime_error("trial " + std::to_string(err_trial) +
                                 " failed: " + e.what());
      }
    }
  }

  ExperimentResult res;
  const std::size_t steps = static_cast<std::size_t>(plan.horizon);
  res.aggregate.n_trials = plan.n_trials;
  res.aggregate.mean_cum_regret.assign(steps, 0.0);
  res.aggregate.std_cum_regret.assign(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += traces[i].cum_regret[t];
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = traces[i].cum_regret[t] - mean;
      ss += d * d;
    }
    res.aggregate.mean_cum_regret[t] = mean;
    res.aggregate.std_cum_regret[t] =
        m > 1 ? std::sqrt(ss / static_cast<double>(m - 1)) : 0.0;
  }
  if (plan.keep_traces) res.traces = std::move(traces);
  return res;
}

class FitError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// OLS slope of log R(T) against log T over (horizon, final regret) pairs.
// For regret growing as T^gamma the fitted slope recovers gamma.
inline double fit_regret_exponent(
    std::span<const std::pair<double, double>> points) {
  if (points.size() < 3)
    throw FitError("fit_regret_exponent: need >= 3 (T, regret) points");
  std::vector<double> lx, ly;
  lx.reserve(points.size());
  ly.reserve(points.size());
  for (const auto& [t, r] : points) {
    if (!(t > 0.0))
      throw FitError("fit_regret_exponent: horizons must be > 0");
    if (!(r > 0.0))
      throw FitError("fit_regret_exponent: regrets must be > 0 on a log scale");
    lx.push_back(std::log(t));
    ly.push_back(std::log(r));
  }
  double mx = 0.0;
  for (double v : lx) mx += v;
  mx /= static_cast<double>(lx.size());
  double sxx = 0.0, sxy = 0.0;
  double my = 0.0;
  for (double v : ly) my += v;
  my /= static_cast<double>(ly.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0))
    throw FitError("fit_regret_exponent: horizons must be distinct");
  return sxy / sxx;
}

}  // namespace knnbandit
