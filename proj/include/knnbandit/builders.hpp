#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <variant>

#include "knnbandit/baselines.hpp"
#include "knnbandit/config.hpp"
#include "knnbandit/dataset.hpp"
#include "knnbandit/environments.hpp"
#include "knnbandit/hard_instance.hpp"
#include "knnbandit/policy.hpp"
#include "knnbandit/simulate.hpp"

namespace knnbandit {

inline std::shared_ptr<const ContextDistribution> make_distribution(
    const SyntheticEnvCfg& e) {
  switch (e.distribution) {
    case DistKind::Uniform:
      return std::make_shared<UniformBox>(e.dim, e.half_width);
    case DistKind::Gaussian:
      return std::make_shared<StandardGaussian>(e.dim);
    case DistKind::StudentT:
      return std::make_shared<StudentT>(e.dim, e.dof);
    case DistKind::Cauchy:
      return std::make_shared<CauchyDistribution>(e.dim);
  }
  throw std::logic_error("make_distribution: unhandled kind");
}

inline std::shared_ptr<const RewardFamily> make_reward_family(
    const SyntheticEnvCfg& e) {
  switch (e.reward) {
    case RewardKind::LinearPair:
      return std::make_shared<LinearPair>(e.dim, e.sigma);
    case RewardKind::TrigPair:
      return std::make_shared<TrigPair>(e.dim, e.sigma);
  }
  throw std::logic_error("make_reward_family: unhandled kind");
}

// Builds the instance a hard-instance env describes; deterministic in
// (horizon, params, instance_seed).
inline std::shared_ptr<const HardInstanceSpec> make_hard_spec(
    long horizon, const HardInstanceEnvCfg& e) {
  Rng rng(e.instance_seed);
  return std::make_shared<HardInstanceSpec>(
      build_hard_instance(horizon, e.alpha, e.c_alpha, e.beta, e.c_beta, e.dim,
                          e.variant, rng));
}

// Everything cmd_run needs beyond the raw config: per-trial factories plus the
// statically known shape. Heavy shared state (datasets, instance specs) is
// loaded once here and captured by the factories.
struct Runtime {
  std::function<std::unique_ptr<Environment>()> make_env;
  std::function<std::unique_ptr<Policy>(Environment&, std::uint64_t)>
      make_policy;
  std::size_t dim = 0;
  std::size_t num_actions = 0;
};

inline Runtime make_runtime(const ExperimentConfig& cfg) {
  Runtime rt;

  if (const auto* s = std::get_if<SyntheticEnvCfg>(&cfg.env)) {
    auto dist = make_distribution(*s);
    auto family = make_reward_family(*s);
    rt.dim = dist->dim();
    rt.num_actions = family->num_actions();
    rt.make_env = [dist, family] {
      return std::make_unique<SyntheticEnv>(dist, family);
    };
  } else if (const auto* h = std::get_if<HardInstanceEnvCfg>(&cfg.env)) {
    auto spec = make_hard_spec(cfg.run.horizon, *h);
    const double sigma = h->sigma;
    rt.dim = spec->dim;
    rt.num_actions = 2;
    rt.make_env = [spec, sigma] {
      return std::make_unique<SyntheticEnv>(
          std::make_shared<HardInstanceDistribution>(spec),
          std::make_shared<HardInstanceReward>(spec, sigma));
    };
  } else {
    const auto& c = std::get<ClassificationEnvCfg>(cfg.env);
    auto set = std::make_shared<const LabeledImageSet>(
        load_labeled_set(c.images, c.labels, c.subsample));
    rt.dim = set->dim();
    rt.num_actions = set->num_classes;
    rt.make_env = [set] { return std::make_unique<ClassificationEnv>(set); };
  }

  const int horizon = cfg.run.horizon;
  const std::size_t dim = rt.dim;
  const std::size_t num_actions = rt.num_actions;

  if (const auto* p = std::get_if<FixedKnnParams>(&cfg.policy)) {
    PolicyConfig pc;
    pc.horizon = horizon;
    pc.num_actions = static_cast<int>(num_actions);
    pc.dim = static_cast<int>(dim);
    pc.sigma = p->sigma;
    pc.lipschitz = p->lipschitz;
    pc.conf_scale = p->conf_scale;
    pc.k_fixed = p->k;
    rt.make_policy = [pc](Environment&, std::uint64_t) {
      return std::make_unique<FixedKnnPolicy>(pc);
    };
  } else if (const auto* p = std::get_if<AdaptiveKnnParams>(&cfg.policy)) {
    PolicyConfig pc;
    pc.horizon = horizon;
    pc.num_actions = static_cast<int>(num_actions);
    pc.dim = static_cast<int>(dim);
    pc.sigma = p->sigma;
    pc.lipschitz = p->lipschitz;
    pc.conf_scale = p->conf_scale;
    rt.make_policy = [pc](Environment&, std::uint64_t) {
      return std::make_unique<AdaptiveKnnPolicy>(pc);
    };
  } else if (const auto* p = std::get_if<UcbogramParams>(&cfg.policy)) {
    UcbogramConfig uc;
    uc.num_actions = static_cast<int>(num_actions);
    uc.dim = static_cast<int>(dim);
    uc.bins_per_dim = p->bins;
    uc.clip_radius = p->clip;
    rt.make_policy = [uc](Environment&, std::uint64_t) {
      return std::make_unique<UcbogramPolicy>(uc);
    };
  } else if (const auto* p = std::get_if<AbseParams>(&cfg.policy)) {
    AbseConfig ac;
    ac.num_actions = static_cast<int>(num_actions);
    ac.dim = static_cast<int>(dim);
    ac.horizon = horizon;
    ac.max_depth = p->max_depth;
    ac.conf_c = p->conf_c;
    ac.clip_radius = p->clip;
    ac.lipschitz = p->lipschitz;
    rt.make_policy = [ac](Environment&, std::uint64_t) {
      return std::make_unique<AbsePolicy>(ac);
    };
  } else if (std::holds_alternative<OracleParams>(cfg.policy)) {
    rt.make_policy = [num_actions](Environment& env, std::uint64_t) {
      return std::make_unique<OraclePolicy>(
          static_cast<int>(num_actions),
          [&env](int a, std::span<const double> x) {
            return env.mean_reward(static_cast<std::size_t>(a), x);
          });
    };
  } else {
    rt.make_policy = [num_actions](Environment&, std::uint64_t seed) {
      return std::make_unique<RandomPolicy>(static_cast<int>(num_actions),
                                            seed);
    };
  }

  return rt;
}

// Experiment plan wired from a resolved config; traces are kept only when the
// caller wants per-trial output.
inline ExperimentPlan make_plan(const ExperimentConfig& cfg, int threads,
                                bool keep_traces) {
  Runtime rt = make_runtime(cfg);
  ExperimentPlan plan;
  plan.make_env = std::move(rt.make_env);
  plan.make_policy = std::move(rt.make_policy);
  plan.horizon = cfg.run.horizon;
  plan.n_trials = cfg.run.trials;
  plan.master_seed = cfg.run.seed;
  plan.threads = threads;
  plan.keep_traces = keep_traces;
  return plan;
}

}  // namespace knnbandit
