// Release acceptance suite. Each criterion below is an independent check with
// a fixed seed; the binary prints one PASS/FAIL line per criterion and exits
// nonzero if any of them fail. Statistical checks state their tolerance in the
// printed note so a failure is actionable without re-reading the source.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "knnbandit/baselines.hpp"
#include "knnbandit/config.hpp"
#include "knnbandit/dataset.hpp"
#include "knnbandit/environments.hpp"
#include "knnbandit/hard_instance.hpp"
#include "knnbandit/knn_store.hpp"
#include "knnbandit/policy.hpp"
#include "knnbandit/probes.hpp"
#include "knnbandit/rng.hpp"
#include "knnbandit/simulate.hpp"
#include "knnbandit/ucb.hpp"

namespace {

using namespace knnbandit;

struct Outcome {
  bool ok = false;
  std::string note;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int worker_threads() {
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hc, 1u, 8u));
}

// ---------------------------------------------------------------------------
// 1. The neighbor search must agree element-wise with a brute-force scan,
//    including insertion-order tie-breaks, which the quantized coordinates
//    here produce constantly.
Outcome knn_brute_force_equivalence() {
  Rng rng(101);
  std::uniform_int_distribution<int> coord(-8, 8);
  std::uniform_real_distribution<double> reward(0.0, 1.0);
  long episodes = 0;
  for (std::size_t d : {1, 2, 5}) {
    for (std::size_t k : {1, 5, 17}) {
      for (int ep = 0; ep < 112; ++ep) {
        ActionStore store(d);
        const int n = 1 + static_cast<int>(rng() % 60);
        std::vector<double> x(d);
        for (int i = 0; i < n; ++i) {
          for (double& c : x) c = coord(rng) / 4.0;
          store.insert(x, reward(rng));
        }
        for (double& c : x) c = coord(rng) / 4.0;
        const std::vector<NeighborEntry> fast = store.knn(x, k);
        const std::vector<NeighborEntry> slow = brute_knn(store, x, k);
        ++episodes;
        if (fast.size() != slow.size())
          return {false, "episode " + std::to_string(episodes) +
                             ": result sizes differ"};
        for (std::size_t j = 0; j < fast.size(); ++j)
          if (!(fast[j] == slow[j]))
            return {false, "episode " + std::to_string(episodes) + ": entry " +
                               std::to_string(j) + " differs"};
      }
    }
  }
  return {true, std::to_string(episodes) +
                    " episodes over d in {1,2,5}, k in {1,5,17}, all identical"};
}

// ---------------------------------------------------------------------------
// 2. The adaptive neighbor count must be the largest feasible one: the
//    selected k satisfies L*rho_k <= sqrt(ln T / k), and whenever a (k+1)-th
//    sample exists it violates the same inequality at k+1.
Outcome adaptive_k_maximality() {
  Rng rng(202);
  const int horizons[] = {10, 100, 1000, 10000};
  const double lips[] = {0.5, 1.0, 2.0};
  std::normal_distribution<double> gauss;
  std::cauchy_distribution<double> cauchy;
  long with_k = 0;
  long without_k = 0;
  for (int state = 0; state < 500; ++state) {
    const int d = 1 + static_cast<int>(rng() % 3);
    PolicyConfig cfg;
    cfg.horizon = horizons[rng() % 4];
    cfg.num_actions = 2;
    cfg.dim = d;
    cfg.sigma = 0.5;
    cfg.lipschitz = lips[rng() % 3];
    cfg.conf_scale = 1.0;
    cfg.k_fixed = 1;

    PolicyState st(2, d);
    const int n = static_cast<int>(rng() % 41);
    const bool heavy = rng() % 2 == 0;
    std::vector<double> x(static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
      for (double& c : x) c = heavy ? cauchy(rng) : gauss(rng);
      st.stores[0].insert(x, 0.0);
    }
    for (double& c : x) c = heavy ? cauchy(rng) : gauss(rng);

    const std::optional<int> k = adaptive_select_k(cfg, st, 0, x);
    const double ln_t = std::log(static_cast<double>(cfg.horizon));
    const ActionStore& store = st.stores[0];
    const std::string tag = "state " + std::to_string(state);
    if (!k) {
      ++without_k;
      if (!store.empty()) {
        const double r1 = store.min_distance(x);
        if (!(cfg.lipschitz * r1 > std::sqrt(ln_t) - 1e-12))
          return {false, tag + ": no k returned although k=1 is feasible"};
      }
      continue;
    }
    ++with_k;
    const std::vector<double> rho =
        store.sorted_distances(x, static_cast<std::size_t>(*k) + 1);
    const double rk = rho[static_cast<std::size_t>(*k) - 1];
    if (!(cfg.lipschitz * rk <=
          std::sqrt(ln_t / static_cast<double>(*k)) + 1e-12))
      return {false, tag + ": selected k=" + std::to_string(*k) +
                         " fails its own feasibility bound"};
    if (rho.size() > static_cast<std::size_t>(*k)) {
      const double rk1 = rho[static_cast<std::size_t>(*k)];
      if (!(cfg.lipschitz * rk1 >
            std::sqrt(ln_t / static_cast<double>(*k + 1)) - 1e-12))
        return {false, tag + ": k=" + std::to_string(*k + 1) +
                           " is still feasible, selection not maximal"};
    }
  }
  return {true, "500 states (" + std::to_string(with_k) + " with a k, " +
                    std::to_string(without_k) + " infeasible/empty), maximal"};
}

// ---------------------------------------------------------------------------
// 3. With sigma = 0 every stored reward equals the mean function, so by the
//    Lipschitz bound each finite index must upper-bound the true mean at the
//    query. Checked at every step for both policies.
Outcome noiseless_ucb_soundness() {
  const auto dist = std::make_shared<UniformBox>(1, 1.0);
  const auto fam = std::make_shared<LinearPair>(1, 0.0);
  const int horizon = 2000;
  long checked = 0;
  long violations = 0;

  PolicyConfig cfg;
  cfg.horizon = horizon;
  cfg.num_actions = 2;
  cfg.dim = 1;
  cfg.sigma = 0.0;
  cfg.lipschitz = 1.0;
  cfg.conf_scale = 1.0;
  cfg.k_fixed = default_fixed_k(horizon, 1);

  auto run_one = [&](auto policy, std::uint64_t seed) {
    SyntheticEnv env(dist, fam);
    Rng env_rng(seed);
    for (int t = 0; t < horizon; ++t) {
      const std::vector<double> x = env.sample_context(env_rng);
      const std::vector<UcbValue> vals = policy.ucb_values(x);
      for (std::size_t a = 0; a < vals.size(); ++a) {
        if (vals[a].is_infinite()) continue;
        ++checked;
        if (vals[a].value() <
            env.mean_reward(a, x) - 1e-12)
          ++violations;
      }
      const int a = policy.act(x);
      const double r =
          env.sample_reward(static_cast<std::size_t>(a), x, env_rng);
      policy.observe(x, a, r);
    }
  };
  run_one(FixedKnnPolicy(cfg), derive_seed(3001, 0));
  run_one(AdaptiveKnnPolicy(cfg), derive_seed(3001, 1));

  if (violations != 0)
    return {false, std::to_string(violations) + " of " +
                       std::to_string(checked) +
                       " finite indices fell below the true mean"};
  return {true, std::to_string(checked) +
                    " finite indices across both policies, none below truth"};
}

// ---------------------------------------------------------------------------
// 4. With sigma = 0.5 the concentration bonus still has to cover the truth at
//    almost every (step, arm) pair; the ceiling of 1% is far above the union
//    bound the width is built for.
Outcome noisy_ucb_coverage() {
  const auto dist = std::make_shared<UniformBox>(1, 1.0);
  const auto fam = std::make_shared<LinearPair>(1, 0.5);
  const int horizon = 1000;
  const int trials = 20;

  PolicyConfig cfg;
  cfg.horizon = horizon;
  cfg.num_actions = 2;
  cfg.dim = 1;
  cfg.sigma = 0.5;
  cfg.lipschitz = 1.0;
  cfg.conf_scale = 1.0;
  cfg.k_fixed = 100;

  long pairs = 0;
  long violations = 0;
  for (int i = 0; i < trials; ++i) {
    SyntheticEnv env(dist, fam);
    FixedKnnPolicy policy(cfg);
    Rng env_rng(derive_seed(derive_seed(4001, static_cast<std::uint64_t>(i)), 0));
    for (int t = 0; t < horizon; ++t) {
      const std::vector<double> x = env.sample_context(env_rng);
      const std::vector<UcbValue> vals = policy.ucb_values(x);
      for (std::size_t a = 0; a < vals.size(); ++a) {
        ++pairs;
        if (!vals[a].is_infinite() &&
            vals[a].value() < env.mean_reward(a, x) - 1e-12)
          ++violations;
      }
      const int a = policy.act(x);
      const double r =
          env.sample_reward(static_cast<std::size_t>(a), x, env_rng);
      policy.observe(x, a, r);
    }
  }
  const double frac =
      static_cast<double>(violations) / static_cast<double>(pairs);
  if (!(frac <= 0.01))
    return {false, "violation fraction " + num(frac) + " over " +
                       std::to_string(pairs) + " (t,a) pairs exceeds 0.01"};
  return {true, "violation fraction " + num(frac) + " over " +
                    std::to_string(pairs) + " (t,a) pairs (ceiling 0.01)"};
}

// ---------------------------------------------------------------------------
// Shared harness for the regret-ordering criteria.
struct AlgoResult {
  double mean = 0.0;
  double se = 0.0;
};

AlgoResult run_algo(
    const std::shared_ptr<const ContextDistribution>& dist,
    const std::shared_ptr<const RewardFamily>& fam,
    const std::function<std::unique_ptr<Policy>(Environment&, std::uint64_t)>&
        make_policy,
    int horizon, int trials, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.make_env = [dist, fam]() -> std::unique_ptr<Environment> {
    return std::make_unique<SyntheticEnv>(dist, fam);
  };
  plan.make_policy = make_policy;
  plan.horizon = horizon;
  plan.n_trials = trials;
  plan.master_seed = seed;
  plan.threads = worker_threads();
  const ExperimentResult res = run_experiment(plan);
  AlgoResult out;
  out.mean = res.aggregate.mean_cum_regret.back();
  out.se = res.aggregate.std_cum_regret.back() /
           std::sqrt(static_cast<double>(trials));
  return out;
}

// Final regret of adaptive vs fixed vs best-binned UCBogram for one context
// distribution; returns a failure string or appends a short summary to note.
std::string ordering_case(const std::string& label,
                          const std::shared_ptr<const ContextDistribution>& dist,
                          const std::shared_ptr<const RewardFamily>& fam,
                          int dim, std::uint64_t seed, std::string& note) {
  const int horizon = 1000;
  const int trials = 100;

  // Both neighbor policies run at a practical bonus scale: the full
  // concentration constant is a worst-case union bound (b ~ 4.2 at k=1 for
  // T=1000, wider than the entire reward range) and at that scale the
  // comparison measures over-exploration, not adaptivity. The scale is shared
  // by the fixed and adaptive policies, so that leg stays internally fair;
  // UCBogram keeps its standard UCB1 width and gets its best bin count.
  PolicyConfig base;
  base.horizon = horizon;
  base.num_actions = 2;
  base.dim = dim;
  base.sigma = 0.5;
  base.lipschitz = fam->lipschitz().value();
  base.conf_scale = 0.15;

  PolicyConfig fixed_cfg = base;
  fixed_cfg.k_fixed = default_fixed_k(horizon, static_cast<std::size_t>(dim));
  PolicyConfig adaptive_cfg = base;
  adaptive_cfg.k_fixed = 1;

  const AlgoResult fixed = run_algo(
      dist, fam,
      [fixed_cfg](Environment&, std::uint64_t) -> std::unique_ptr<Policy> {
        return std::make_unique<FixedKnnPolicy>(fixed_cfg);
      },
      horizon, trials, seed);
  const AlgoResult adaptive = run_algo(
      dist, fam,
      [adaptive_cfg](Environment&, std::uint64_t) -> std::unique_ptr<Policy> {
        return std::make_unique<AdaptiveKnnPolicy>(adaptive_cfg);
      },
      horizon, trials, seed + 1);

  AlgoResult best_gram;
  best_gram.mean = std::numeric_limits<double>::infinity();
  int best_bins = 0;
  for (int bins : {4, 8, 16, 32}) {
    UcbogramConfig gc;
    gc.num_actions = 2;
    gc.dim = dim;
    gc.bins_per_dim = bins;
    const AlgoResult g = run_algo(
        dist, fam,
        [gc](Environment&, std::uint64_t) -> std::unique_ptr<Policy> {
          return std::make_unique<UcbogramPolicy>(gc);
        },
        horizon, trials, seed + 10 + static_cast<std::uint64_t>(bins));
    if (g.mean < best_gram.mean) {
      best_gram = g;
      best_bins = bins;
    }
  }

  const double gap_fixed = fixed.mean - adaptive.mean;
  const double gap_gram = best_gram.mean - adaptive.mean;
  const double se_fixed = std::hypot(adaptive.se, fixed.se);
  const double se_gram = std::hypot(adaptive.se, best_gram.se);
  if (!(gap_fixed >= se_fixed))
    return label + ": adaptive " + num(adaptive.mean) + " not below fixed " +
           num(fixed.mean) + " by 1 se (" + num(se_fixed) + ")";
  if (!(gap_gram >= se_gram))
    return label + ": adaptive " + num(adaptive.mean) +
           " not below best ucbogram " + num(best_gram.mean) + " (" +
           std::to_string(best_bins) + " bins) by 1 se (" + num(se_gram) + ")";
  if (!note.empty()) note += "; ";
  note += label + " ad=" + num(adaptive.mean) + " fx=" + num(fixed.mean) +
          " gram=" + num(best_gram.mean);
  return "";
}

// 5. Final regret ordering at d=1 for all four context distributions: the
//    adaptive policy beats both the fixed-k policy and the best-binned
//    UCBogram by at least one combined standard error (T=1000, 100 trials).
Outcome d1_regret_ordering() {
  std::string note;
  struct Case {
    const char* label;
    std::shared_ptr<const ContextDistribution> dist;
    std::shared_ptr<const RewardFamily> fam;
  };
  const Case cases[] = {
      {"uniform", std::make_shared<UniformBox>(1, 1.0),
       std::make_shared<LinearPair>(1, 0.5)},
      {"gaussian", std::make_shared<StandardGaussian>(1),
       std::make_shared<LinearPair>(1, 0.5)},
      {"t4", std::make_shared<StudentT>(1, 4.0),
       std::make_shared<TrigPair>(1, 0.5)},
      {"cauchy", std::make_shared<CauchyDistribution>(1),
       std::make_shared<TrigPair>(1, 0.5)},
  };
  std::uint64_t seed = 25001;
  for (const Case& c : cases) {
    const std::string err = ordering_case(c.label, c.dist, c.fam, 1, seed, note);
    if (!err.empty()) return {false, err};
    seed += 100;
  }
  return {true, note};
}

// 6. Same ordering at d=2, with each context distribution the coordinate
//    product of two one-dimensional copies.
Outcome d2_regret_ordering() {
  std::string note;
  struct Case {
    const char* label;
    std::shared_ptr<const ContextDistribution> dist;
    std::shared_ptr<const RewardFamily> fam;
  };
  const Case cases[] = {
      {"gaussian2", std::make_shared<StandardGaussian>(2),
       std::make_shared<LinearPair>(2, 0.5)},
      {"t4x2", std::make_shared<StudentT>(2, 4.0),
       std::make_shared<TrigPair>(2, 0.5)},
      {"cauchy2", std::make_shared<CauchyDistribution>(2),
       std::make_shared<TrigPair>(2, 0.5)},
  };
  std::uint64_t seed = 6001;
  for (const Case& c : cases) {
    const std::string err = ordering_case(c.label, c.dist, c.fam, 2, seed, note);
    if (!err.empty()) return {false, err};
    seed += 100;
  }
  return {true, note};
}

// ---------------------------------------------------------------------------
// 7. Growth rate of the fixed-k policy's final regret across horizons. With
//    margin exponent 1 at d=1 the theoretical rate is T^(1/3) up to log
//    factors, so the fitted log-log slope must land in 1/3 +- 0.25. The
//    neighbor count follows the margin-tuned schedule k = ceil(T^(1/2)):
//    the dimension-balanced default k ~ T^(2/3) forces ~2k exploration pulls
//    whose ~T^(2/3) regret would dominate the fit at these horizons.
Outcome fixed_k_regret_exponent() {
  const auto dist = std::make_shared<UniformBox>(1, 1.0);
  const auto fam = std::make_shared<LinearPair>(1, 0.5);
  std::vector<std::pair<double, double>> points;
  for (int horizon : {250, 500, 1000, 2000, 4000}) {
    PolicyConfig cfg;
    cfg.horizon = horizon;
    cfg.num_actions = 2;
    cfg.dim = 1;
    cfg.sigma = 0.5;
    cfg.lipschitz = 1.0;
    cfg.conf_scale = 1.0;
    cfg.k_fixed = margin_tuned_k(horizon, 1.0);
    const AlgoResult r = run_algo(
        dist, fam,
        [cfg](Environment&, std::uint64_t) -> std::unique_ptr<Policy> {
          return std::make_unique<FixedKnnPolicy>(cfg);
        },
        horizon, 50, 7001 + static_cast<std::uint64_t>(horizon));
    points.emplace_back(static_cast<double>(horizon), r.mean);
  }
  const double slope = fit_regret_exponent(points);
  if (!(std::abs(slope - 1.0 / 3.0) <= 0.25))
    return {false, "fitted exponent " + num(slope) +
                       " outside 1/3 +- 0.25 (horizons 250..4000, 50 trials)"};
  return {true, "fitted exponent " + num(slope) +
                    " within 1/3 +- 0.25 (horizons 250..4000, 50 trials)"};
}

// ---------------------------------------------------------------------------
// 8. Tail exponents of the context densities: the Monte Carlo slope of
//    P(f(X) <= u) over a log-spaced grid must land within +-0.1 of the
//    closed-form beta for each distribution.
Outcome tail_exponent_probes() {
  struct Case {
    const char* label;
    std::shared_ptr<const ContextDistribution> dist;
    double beta;
  };
  const Case cases[] = {
      {"gaussian1", std::make_shared<StandardGaussian>(1), 1.0},
      {"t4x1", std::make_shared<StudentT>(1, 4.0), 0.8},
      {"cauchy1", std::make_shared<CauchyDistribution>(1), 0.5},
      {"t4x2", std::make_shared<StudentT>(2, 4.0), 2.0 / 3.0},
      {"cauchy2", std::make_shared<CauchyDistribution>(2), 1.0 / 3.0},
  };
  const std::vector<double> grid = log_spaced(1e-4, 1e-2, 8);
  std::string note;
  std::uint64_t seed = 8001;
  for (const Case& c : cases) {
    Rng rng(seed++);
    const TailProbeResult res =
        tail_exponent_probe(*c.dist, grid, 1000000, rng);
    if (!(std::abs(res.slope - c.beta) <= 0.1))
      return {false, std::string(c.label) + ": slope " + num(res.slope) +
                         " outside " + num(c.beta) + " +- 0.1"};
    if (!note.empty()) note += ", ";
    note += std::string(c.label) + " " + num(res.slope) + " (want " +
            num(c.beta) + ")";
  }
  return {true, note};
}

// ---------------------------------------------------------------------------
// 9. Generated lower-bound instances: every reported constraint satisfied,
//    the mixture density integrates to 1 within 3 Monte Carlo sigmas, and the
//    empirical margin mass stays under C_alpha u^alpha (+3 binomial sigmas)
//    on a grid of levels at and above the ball radius, for both actions.
Outcome hard_instance_validity() {
  struct Params {
    HardVariant variant;
    long horizon;
    double alpha, c_alpha, beta, c_beta;
    std::size_t dim;
  };
  std::vector<Params> grid;
  for (std::size_t d : {1, 2, 3}) {
    const double vd = unit_ball_volume(d);
    for (double frac : {0.25, 0.5, 0.75, 1.0})
      for (long horizon : {500, 5000})
        for (double ca : {2.0 * vd, 4.0 * vd})
          grid.push_back({HardVariant::Bounded, horizon,
                          frac * static_cast<double>(d), ca, 1.0, 1.0, d});
  }
  for (std::size_t d : {1, 2}) {
    const double vd = unit_ball_volume(d);
    for (double frac : {0.5, 1.0})
      for (double beta : {0.5, 1.0})
        for (double cb : {0.5, 1.0})
          for (long horizon : {500, 5000})
            grid.push_back({HardVariant::Tailed, horizon,
                            frac * static_cast<double>(d), 2.0 * vd, beta, cb,
                            d});
  }
  for (double alpha : {0.25, 0.75})
    for (double beta : {0.5, 1.0})
      for (double cb : {0.5, 1.0})
        for (long horizon : {500, 5000})
          grid.push_back(
              {HardVariant::Tailed, horizon, alpha, 4.0, beta, cb, 1});
  for (std::size_t d : {1, 2})
    for (long horizon : {500, 5000})
      grid.push_back({HardVariant::Bounded, horizon, static_cast<double>(d),
                      8.0 * unit_ball_volume(d), 1.0, 1.0, d});
  if (grid.size() != 100)
    return {false, "parameter grid has " + std::to_string(grid.size()) +
                       " entries, expected 100"};

  long bounded = 0;
  long tailed = 0;
  const long n_mc = 20000;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Params& p = grid[i];
    const std::string tag = "instance " + std::to_string(i) + " (" +
                            to_string(p.variant) + " d=" +
                            std::to_string(p.dim) + " T=" +
                            std::to_string(p.horizon) + " alpha=" +
                            num(p.alpha) + ")";
    Rng build_rng(derive_seed(9001, i));
    HardInstanceSpec spec;
    try {
      spec = build_hard_instance(p.horizon, p.alpha, p.c_alpha, p.beta,
                                 p.c_beta, p.dim, p.variant, build_rng);
    } catch (const std::exception& e) {
      return {false, tag + ": build failed: " + e.what()};
    }
    (p.variant == HardVariant::Bounded ? bounded : tailed) += 1;

    const std::vector<ConstraintCheck> checks = check_constraints(spec);
    for (const ConstraintCheck& c : checks)
      if (!c.satisfied)
        return {false, tag + ": constraint " + c.name + " unsatisfied (lhs " +
                           num(c.lhs) + " vs " + num(c.rhs) + ")"};

    const auto sp = std::make_shared<const HardInstanceSpec>(spec);
    const HardInstanceDistribution dist(sp);

    // Monte Carlo normalization over the bounding box of the support.
    std::vector<double> lo(spec.dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(spec.dim, -std::numeric_limits<double>::infinity());
    for (std::size_t b = 0; b < spec.centers.size(); ++b) {
      const double r = (spec.variant == HardVariant::Tailed && b == 0)
                           ? spec.radius_center
                           : spec.radius_h;
      for (std::size_t j = 0; j < spec.dim; ++j) {
        lo[j] = std::min(lo[j], spec.centers[b][j] - r);
        hi[j] = std::max(hi[j], spec.centers[b][j] + r);
      }
    }
    double vol = 1.0;
    for (std::size_t j = 0; j < spec.dim; ++j) vol *= hi[j] - lo[j];
    Rng mc_rng(derive_seed(9101, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(spec.dim);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (long s = 0; s < n_mc; ++s) {
      for (std::size_t j = 0; j < spec.dim; ++j)
        x[j] = lo[j] + (hi[j] - lo[j]) * unit(mc_rng);
      const double f = dist.pdf(x);
      sum += f;
      sum_sq += f * f;
    }
    const double mean = sum / static_cast<double>(n_mc);
    const double var =
        (sum_sq - sum * mean) / static_cast<double>(n_mc - 1);
    const double est = vol * mean;
    const double se = vol * std::sqrt(std::max(var, 0.0)) /
                      std::sqrt(static_cast<double>(n_mc));
    if (!(std::abs(est - 1.0) <= 3.0 * se + 1e-9))
      return {false, tag + ": normalization estimate " + num(est) + " +- " +
                         num(se) + " not within 3 sigmas of 1"};

    // Empirical margin mass against C_alpha u^alpha at levels >= h, where
    // the construction's margin bound applies.
    const HardInstanceReward reward(sp, 0.0);
    const double h = spec.radius_h;
    const std::vector<double> levels = {1.05 * h, 1.5 * h, 2.0 * h, 3.0 * h,
                                        5.0 * h};
    for (std::size_t action = 0; action < 2; ++action) {
      Rng probe_rng(derive_seed(9201, 2 * i + action));
      const std::vector<double> p_hat =
          margin_probe(reward, dist, action, levels, n_mc, probe_rng);
      for (std::size_t j = 0; j < levels.size(); ++j) {
        const double bound = p.c_alpha * std::pow(levels[j], p.alpha);
        const double sg = std::sqrt(p_hat[j] * (1.0 - p_hat[j]) /
                                    static_cast<double>(n_mc));
        if (!(p_hat[j] <= bound + 3.0 * sg + 1e-9))
          return {false, tag + ": margin mass " + num(p_hat[j]) + " at u=" +
                             num(levels[j]) + " exceeds " + num(bound) +
                             " + 3 sigmas (action " +
                             std::to_string(action) + ")"};
      }
    }
  }
  return {true, std::to_string(bounded) + " bounded + " +
                    std::to_string(tailed) +
                    " tailed instances: constraints, normalization, margin"};
}

// ---------------------------------------------------------------------------
// 10. IDX codec: hand-written files decode field-for-field, re-serialize to
//     the identical bytes, and every malformed variant is rejected with the
//     byte offset of the defect.
Outcome idx_codec() {
  auto be32 = [](std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  };

  std::vector<std::uint8_t> images;
  be32(images, kIdxImagesMagic);
  be32(images, 2);
  be32(images, 2);
  be32(images, 3);
  const std::vector<std::uint8_t> pixels = {0,  255, 1,  2,  3,  4,
                                            10, 20,  30, 40, 50, 60};
  images.insert(images.end(), pixels.begin(), pixels.end());

  std::vector<std::uint8_t> labels;
  be32(labels, kIdxLabelsMagic);
  be32(labels, 3);
  labels.insert(labels.end(), {7, 0, 9});

  const RawIdxImages img = parse_idx_images(images);
  if (img.count != 2 || img.rows != 2 || img.cols != 3 || img.pixels != pixels)
    return {false, "image fields decoded incorrectly"};
  if (serialize_idx_images(img) != images)
    return {false, "image reserialization is not byte-identical"};

  const std::vector<std::uint8_t> lab = parse_idx_labels(labels);
  if (lab != std::vector<std::uint8_t>{7, 0, 9})
    return {false, "label payload decoded incorrectly"};
  if (serialize_idx_labels(lab) != labels)
    return {false, "label reserialization is not byte-identical"};

  auto images_offset =
      [](const std::vector<std::uint8_t>& b) -> std::optional<std::size_t> {
    try {
      (void)parse_idx_images(b);
    } catch (const IdxParseError& e) {
      return e.offset;
    }
    return std::nullopt;
  };
  auto labels_offset =
      [](const std::vector<std::uint8_t>& b) -> std::optional<std::size_t> {
    try {
      (void)parse_idx_labels(b);
    } catch (const IdxParseError& e) {
      return e.offset;
    }
    return std::nullopt;
  };

  struct Reject {
    const char* what;
    std::optional<std::size_t> got;
    std::size_t want;
  };
  std::vector<std::uint8_t> bad;

  std::vector<Reject> rejects;
  rejects.push_back({"empty image file", images_offset({}), 0});
  rejects.push_back({"image magic", images_offset(labels), 0});
  rejects.push_back({"label magic", labels_offset(images), 0});

  bad.assign(images.begin(), images.begin() + 8);
  rejects.push_back({"truncated image header", images_offset(bad), 8});

  bad.assign(images.begin(), images.begin() + 21);
  rejects.push_back({"truncated image payload", images_offset(bad), 21});

  bad = images;
  bad.push_back(0);
  rejects.push_back({"trailing image byte", images_offset(bad), 28});

  bad.assign(labels.begin(), labels.begin() + 10);
  rejects.push_back({"truncated label payload", labels_offset(bad), 10});

  bad = labels;
  bad.push_back(0);
  rejects.push_back({"trailing label byte", labels_offset(bad), 11});

  for (const Reject& r : rejects) {
    if (!r.got)
      return {false, std::string(r.what) + " was accepted"};
    if (*r.got != r.want)
      return {false, std::string(r.what) + " reported offset " +
                         std::to_string(*r.got) + ", expected " +
                         std::to_string(r.want)};
  }
  return {true, "round-trip exact; " + std::to_string(rejects.size()) +
                    " malformed variants rejected at the right offset"};
}

// ---------------------------------------------------------------------------
// 11. The CLI must write byte-identical aggregate CSVs for the same config
//     and output path regardless of the worker thread count.
Outcome cli_thread_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() /
      ("knnbandit-accept-" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "exp.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "run.T = 300\n"
           "run.trials = 10\n"
           "run.seed = 123\n"
           "env.distribution = uniform\n"
           "env.reward = linear_pair\n"
           "policy.kind = fixed_knn\n"
           "policy.k = 20\n";
  }
  const fs::path out_path = dir / "agg.csv";

  auto run_with = [&](int threads) -> std::optional<std::string> {
    const std::string cmd = std::string("\"") + KNNBANDIT_CLI_PATH +
                            "\" run --config \"" + cfg_path.string() +
                            "\" --out \"" + out_path.string() +
                            "\" --threads " + std::to_string(threads) +
                            " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return std::nullopt;
    std::ifstream in(out_path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  const std::optional<std::string> one = run_with(1);
  const std::optional<std::string> eight = run_with(8);
  std::error_code ec;
  fs::remove_all(dir, ec);

  if (!one) return {false, "--threads 1 run failed"};
  if (!eight) return {false, "--threads 8 run failed"};
  if (one->empty()) return {false, "CSV output is empty"};
  if (*one != *eight)
    return {false, "CSV bytes differ between --threads 1 and --threads 8"};
  return {true, std::to_string(one->size()) +
                    " CSV bytes identical at --threads 1 and 8"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"knn-brute-force-equivalence", &knn_brute_force_equivalence},
      {"adaptive-k-maximality", &adaptive_k_maximality},
      {"noiseless-ucb-soundness", &noiseless_ucb_soundness},
      {"noisy-ucb-coverage", &noisy_ucb_coverage},
      {"d1-regret-ordering", &d1_regret_ordering},
      {"d2-regret-ordering", &d2_regret_ordering},
      {"fixed-k-regret-exponent", &fixed_k_regret_exponent},
      {"tail-exponent-probes", &tail_exponent_probes},
      {"hard-instance-validity", &hard_instance_validity},
      {"idx-codec", &idx_codec},
      {"cli-thread-determinism", &cli_thread_determinism},
  };

  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("unexpected exception: ") + e.what()};
    }
    std::printf("%s %2d %-29s %s\n", o.ok ? "PASS" : "FAIL", index, c.name,
                o.note.c_str());
    std::fflush(stdout);
    if (!o.ok) ++failures;
  }
  const int total = static_cast<int>(std::size(criteria));
  std::printf("%d/%d criteria passed\n", total - failures, total);
  return failures == 0 ? 0 : 1;
}
