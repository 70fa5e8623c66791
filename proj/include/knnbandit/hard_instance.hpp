#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "knnbandit/environments.hpp"
#include "knnbandit/rng.hpp"

namespace knnbandit {

enum class HardVariant { Bounded, Tailed };

inline const char* to_string(HardVariant v) {
  return v == HardVariant::Bounded ? "bounded" : "tailed";
}

// Volume of the unit l2 ball in R^d.
inline double unit_ball_volume(std::size_t dim) {
  const double d = static_cast<double>(dim);
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

// A concrete lower-bound instance: disjoint balls carrying the margin bumps.
//
// Bounded variant: B balls of radius h, uniform density 1 over their union
// (B v_d h^d = 1); the first K balls are margin balls where eta_1 = sign * h,
// eta_2 = 0.
//
// Tailed variant: a center ball of radius r0 with density 1 (bulk mass) plus
// B = K tail balls of radius h with density m << 1; every tail ball is a
// margin ball. eta on margin balls as above.
struct HardInstanceSpec {
  std::size_t dim = 1;
  HardVariant variant = HardVariant::Bounded;
  long horizon = 1;       // T the instance was sized for
  double alpha = 1.0;     // margin exponent
  double c_alpha = 1.0;   // margin constant C_alpha
  double beta = 1.0;      // tail exponent (tailed variant)
  double c_beta = 1.0;    // tail constant C_beta (tailed variant)
  double radius_h = 0.0;  // margin/tail ball radius
  double radius_center = 0.0;  // center-ball radius r0; 0 for bounded
  double tail_mass_m = 1.0;    // density inside tail balls; 1 for bounded
  std::size_t num_margin_balls_k = 0;  // K
  std::size_t num_balls_b = 0;         // B (tail/regular balls, center excluded)
  std::vector<int> signs;              // K entries, each +-1
  // Tailed: centers[0] is the center ball, then B tail-ball centers.
  // Bounded: B ball centers.
  std::vector<std::vector<double>> centers;

  bool operator==(const HardInstanceSpec&) const = default;
};

struct ConstraintCheck {
  std::string name;
  bool satisfied = false;
  double lhs = 0.0;  // measured quantity
  double rhs = 0.0;  // bound it is compared against
};

class InfeasibleInstanceError : public std::runtime_error {
 public:
  explicit InfeasibleInstanceError(const std::string& constraint)
      : std::runtime_error("hard instance infeasible: " + constraint) {}
};

namespace detail {
inline bool leq_tol(double lhs, double rhs) {
  return lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs));
}
inline double center_distance(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double s2 = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s2 += d * d;
  }
  return std::sqrt(s2);
}
}  // namespace detail

// Every invariant the construction promises, re-derived from the struct alone
// so instances can be audited after serialization round-trips.
inline std::vector<ConstraintCheck> check_constraints(
    const HardInstanceSpec& s) {
  std::vector<ConstraintCheck> out;
  const double v = unit_ball_volume(s.dim);
  const double h = s.radius_h;
  const double hd = std::pow(h, static_cast<double>(s.dim));
  const bool tailed = s.variant == HardVariant::Tailed;
  const std::size_t expect_centers = s.num_balls_b + (tailed ? 1 : 0);

  bool shape_ok = s.dim >= 1 && s.horizon >= 1 && h > 0.0 &&
                  s.num_margin_balls_k >= 1 &&
                  s.num_margin_balls_k <= s.num_balls_b &&
                  s.centers.size() == expect_centers &&
                  s.signs.size() == s.num_margin_balls_k;
  for (const auto& c : s.centers) shape_ok = shape_ok && c.size() == s.dim;
  for (int sg : s.signs) shape_ok = shape_ok && (sg == 1 || sg == -1);
  if (tailed)
    shape_ok = shape_ok && s.radius_center > 0.0 && s.tail_mass_m > 0.0 &&
               s.tail_mass_m < 1.0;
  else
    shape_ok = shape_ok && s.tail_mass_m == 1.0 && s.radius_center == 0.0;
  out.push_back({"shape", shape_ok, shape_ok ? 1.0 : 0.0, 1.0});
  if (!shape_ok) return out;  // remaining checks assume well-formed fields

  // Pairwise ball disjointness; lhs is the worst-case gap between ball hulls.
  double min_gap = std::numeric_limits<double>::infinity();
  auto radius_of = [&](std::size_t i) {
    return (tailed && i == 0) ? s.radius_center : h;
  };
  for (std::size_t i = 0; i < s.centers.size(); ++i)
    for (std::size_t j = i + 1; j < s.centers.size(); ++j) {
      const double gap = detail::center_distance(s.centers[i], s.centers[j]) -
                         radius_of(i) - radius_of(j);
      min_gap = std::min(min_gap, gap);
    }
  if (s.centers.size() == 1) min_gap = h;  // single ball is trivially disjoint
  out.push_back({"balls_disjoint", min_gap > 1e-12, min_gap, 0.0});

  // Total mass of the density must be 1.
  const double tail_mass =
      static_cast<double>(s.num_balls_b) * s.tail_mass_m * v * hd;
  const double bulk_mass =
      tailed ? v * std::pow(s.radius_center, static_cast<double>(s.dim)) : 0.0;
  const double total = tail_mass + bulk_mass;
  out.push_back({"pdf_normalization", std::abs(total - 1.0) <= 1e-9, total, 1.0});

  // Margin condition: P(0 < gap <= h) = m K v_d h^d <= C_alpha h^alpha.
  const double margin_mass =
      s.tail_mass_m * static_cast<double>(s.num_margin_balls_k) * v * hd;
  const double margin_bound = s.c_alpha * std::pow(h, s.alpha);
  out.push_back({"margin_condition", detail::leq_tol(margin_mass, margin_bound),
                 margin_mass, margin_bound});

  if (tailed) {
    // Tail condition at level u = m: P(f(X) <= m) = m K v_d h^d <= C_beta m^beta.
    const double tail_bound = s.c_beta * std::pow(s.tail_mass_m, s.beta);
    out.push_back({"tail_condition", detail::leq_tol(margin_mass, tail_bound),
                   margin_mass, tail_bound});
    // Tail balls may carry at most half the mass (center ball keeps the bulk).
    out.push_back({"tail_mass_bounded", detail::leq_tol(tail_mass, 0.5),
                   tail_mass, 0.5});
  }

  // KL-noise condition: T m v_d h^(d+2) < 1/2 keeps per-ball sign information
  // below one bit over the horizon.
  const double kl = static_cast<double>(s.horizon) * s.tail_mass_m * v *
                    std::pow(h, static_cast<double>(s.dim) + 2.0);
  out.push_back({"kl_condition", kl < 0.5, kl, 0.5});

  return out;
}

inline bool all_satisfied(const std::vector<ConstraintCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ConstraintCheck& c) { return c.satisfied; });
}

namespace detail {

// Ball centers on a cubic lattice with spacing 3h (gap h between hulls).
// `offset` shifts every coordinate; the tailed variant uses it to clear the
// center ball.
inline std::vector<std::vector<double>> lattice_centers(std::size_t count,
                                                        std::size_t dim,
                                                        double spacing,
                                                        double offset) {
  std::size_t side = 1;
  while (std::pow(static_cast<double>(side), static_cast<double>(dim)) <
         static_cast<double>(count))
    ++side;
  std::vector<std::vector<double>> centers;
  centers.reserve(count);
  std::vector<std::size_t> idx(dim, 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> c(dim);
    for (std::size_t j = 0; j < dim; ++j)
      c[j] = offset + spacing * static_cast<double>(idx[j]);
    centers.push_back(std::move(c));
    for (std::size_t j = 0; j < dim; ++j) {  // odometer increment
      if (++idx[j] < side) break;
      idx[j] = 0;
    }
  }
  return centers;
}

}  // namespace detail

// Sizes a feasible instance for horizon T. Shapes follow the lower-bound
// recipe (h ~ T^(-1/(d+2)) up to the tail mass, K maximal under the margin and
// tail constraints); concrete constants are chosen so the KL condition lands
// near 1/4 and the density normalizes exactly. After integer rounding, K is
// decremented until every recorded invariant passes.
inline HardInstanceSpec build_hard_instance(long horizon, double alpha,
                                            double c_alpha, double beta,
                                            double c_beta, std::size_t dim,
                                            HardVariant variant, Rng& rng) {
  if (horizon < 2)
    throw std::invalid_argument("build_hard_instance: horizon must be >= 2");
  if (dim < 1) throw std::invalid_argument("build_hard_instance: dim must be >= 1");
  if (!(alpha > 0.0) || !(c_alpha > 0.0))
    throw std::invalid_argument("build_hard_instance: alpha, c_alpha must be > 0");
  if (alpha > static_cast<double>(dim))
    throw std::invalid_argument("build_hard_instance: requires alpha <= dim");
  if (variant == HardVariant::Tailed && (!(beta > 0.0) || !(c_beta > 0.0)))
    throw std::invalid_argument("build_hard_instance: beta, c_beta must be > 0");

  const double d = static_cast<double>(dim);
  const double v = unit_ball_volume(dim);
  const double T = static_cast<double>(horizon);

  HardInstanceSpec s;
  s.dim = dim;
  s.variant = variant;
  s.horizon = horizon;
  s.alpha = alpha;
  s.c_alpha = c_alpha;
  s.beta = beta;
  s.c_beta = c_beta;

  auto floor_cap = [](double x) -> std::size_t {
    if (!(x >= 0.0)) return 0;
    if (x >= 1e15) return static_cast<std::size_t>(1e15);
    return static_cast<std::size_t>(x);
  };

  if (variant == HardVariant::Bounded) {
    s.tail_mass_m = 1.0;
    // h0 from the KL condition at ~1/4, then B from normalization and h
    // readjusted so B v_d h^d = 1 exactly.
    const double h0 = std::pow(4.0 * v * T, -1.0 / (d + 2.0));
    std::size_t b =
        std::max<std::size_t>(1, floor_cap(std::llround(1.0 / (v * std::pow(h0, d)))));
    s.radius_h = std::pow(1.0 / (static_cast<double>(b) * v), 1.0 / d);
    // At small T the rounded B can leave the KL condition unmet; extra balls
    // shrink h until it holds.
    while (T * v * std::pow(s.radius_h, d + 2.0) >= 0.5) {
      ++b;
      s.radius_h = std::pow(1.0 / (static_cast<double>(b) * v), 1.0 / d);
    }
    s.num_balls_b = b;
    const double k_margin =
        c_alpha * std::pow(s.radius_h, alpha - d) / v;  // K v h^d <= C_a h^a
    std::size_t k = std::min<std::size_t>(b, floor_cap(k_margin));
    if (k < 1) throw InfeasibleInstanceError(
        "margin_condition admits no margin ball (K < 1); increase c_alpha");
    s.num_margin_balls_k = k;
    s.centers = detail::lattice_centers(b, dim, 3.0 * s.radius_h, 0.0);
  } else {
    // m ~ T^(-alpha/(alpha+beta(d+2))) balances margin and tail constraints.
    const double m = std::pow(T, -alpha / (alpha + beta * (d + 2.0)));
    const double h = std::pow(4.0 * v * T * m, -1.0 / (d + 2.0));
    s.tail_mass_m = m;
    s.radius_h = h;
    const double hd = std::pow(h, d);
    const double k_shape = std::pow(h, alpha - d) / m;
    const double k_margin = c_alpha * std::pow(h, alpha - d) / (m * v);
    const double k_tail = c_beta * std::pow(m, beta - 1.0) / (v * hd);
    const double k_mass = 0.5 / (m * v * hd);
    std::size_t k = floor_cap(
        std::min(std::min(k_shape, k_margin), std::min(k_tail, k_mass)));
    if (k < 1) {
      const double binding = std::min(std::min(k_shape, k_margin), std::min(k_tail, k_mass));
      const char* which =
          binding == k_margin ? "margin_condition"
          : binding == k_tail ? "tail_condition"
          : binding == k_mass ? "tail_mass_bounded"
                              : "margin ball count K ~ h^(alpha-d)/m";
      throw InfeasibleInstanceError(std::string(which) +
                                    " admits no tail ball (K < 1)");
    }
    s.num_margin_balls_k = k;
    s.num_balls_b = k;
  }

  // Tailed geometry depends on K, so (re)build it inside the shrink loop.
  auto finalize_geometry = [&](HardInstanceSpec& sp) {
    if (sp.variant == HardVariant::Tailed) {
      const double hd = std::pow(sp.radius_h, d);
      const double tail_mass =
          static_cast<double>(sp.num_balls_b) * sp.tail_mass_m * v * hd;
      sp.radius_center = std::pow((1.0 - tail_mass) / v, 1.0 / d);
      const double offset = sp.radius_center + 2.0 * sp.radius_h;
      sp.centers = detail::lattice_centers(sp.num_balls_b, dim,
                                           3.0 * sp.radius_h, offset);
      sp.centers.insert(sp.centers.begin(),
                        std::vector<double>(dim, 0.0));  // center ball first
    }
    sp.signs.assign(sp.num_margin_balls_k, 1);  // placeholder until final draw
  };

  finalize_geometry(s);
  while (true) {
    const auto checks = check_constraints(s);
    if (all_satisfied(checks)) break;
    if (s.num_margin_balls_k <= 1) {
      for (const auto& c : checks)
        if (!c.satisfied) throw InfeasibleInstanceError(c.name);
    }
    s.num_margin_balls_k -= 1;
    if (s.variant == HardVariant::Tailed) {
      s.num_balls_b = s.num_margin_balls_k;
    }
    finalize_geometry(s);
  }

  // Rademacher signs drawn last so the shrink loop never consumes randomness.
  std::uniform_int_distribution<int> coin(0, 1);
  for (int& sg : s.signs) sg = coin(rng) == 0 ? -1 : 1;
  return s;
}

// Context marginal induced by a hard instance: a mixture of uniform balls.
class HardInstanceDistribution : public ContextDistribution {
 public:
  explicit HardInstanceDistribution(std::shared_ptr<const HardInstanceSpec> spec)
      : spec_(std::move(spec)) {
    if (!spec_) throw std::invalid_argument("HardInstanceDistribution: null spec");
    const auto checks = check_constraints(*spec_);
    if (!checks.front().satisfied)
      throw std::invalid_argument("HardInstanceDistribution: malformed spec");
    const double v = unit_ball_volume(spec_->dim);
    cum_.reserve(spec_->centers.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < spec_->centers.size(); ++i) {
      acc += ball_density(i) * v *
             std::pow(radius(i), static_cast<double>(spec_->dim));
      cum_.push_back(acc);
    }
    // Guard against drift: the last cumulative weight is the total mass.
    if (std::abs(acc - 1.0) > 1e-6)
      throw std::invalid_argument(
          "HardInstanceDistribution: spec density does not normalize");
    cum_.back() = 1.0;
  }

  std::size_t dim() const override { return spec_->dim; }
  const HardInstanceSpec& spec() const { return *spec_; }

  void sample(Rng& rng, std::span<double> out) const override {
    check_out(out);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng);
    const std::size_t i = static_cast<std::size_t>(
        std::upper_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    const std::size_t ball = std::min(i, cum_.size() - 1);
    sample_in_ball(rng, spec_->centers[ball], radius(ball), out);
  }

  double pdf(std::span<const double> x) const override {
    check_out(x);
    double p = 0.0;  // balls are disjoint; at most one term contributes
    for (std::size_t i = 0; i < spec_->centers.size(); ++i) {
      double s2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double dd = x[j] - spec_->centers[i][j];
        s2 += dd * dd;
      }
      if (std::sqrt(s2) <= radius(i)) p += ball_density(i);
    }
    return p;
  }

 private:
  bool tailed() const { return spec_->variant == HardVariant::Tailed; }
  double radius(std::size_t ball) const {
    return (tailed() && ball == 0) ? spec_->radius_center : spec_->radius_h;
  }
  double ball_density(std::size_t ball) const {
    if (tailed()) return ball == 0 ? 1.0 : spec_->tail_mass_m;
    const double v = unit_ball_volume(spec_->dim);
    const double hd =
        std::pow(spec_->radius_h, static_cast<double>(spec_->dim));
    return 1.0 / (static_cast<double>(spec_->num_balls_b) * v * hd);
  }

  static void sample_in_ball(Rng& rng, const std::vector<double>& center,
                             double r, std::span<double> out) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (double& v : out) {
        v = g(rng);
        n2 += v * v;
      }
    } while (n2 == 0.0);
    const double scale =
        r *
        std::pow(u01(rng), 1.0 / static_cast<double>(out.size())) /
        std::sqrt(n2);
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = center[j] + out[j] * scale;
  }

  std::shared_ptr<const HardInstanceSpec> spec_;
  std::vector<double> cum_;  // cumulative ball masses, cum_.back() == 1
};

// Two-arm rewards of the lower-bound instance: eta_1 carries the signed bumps
// of height h on the margin balls, eta_2 is identically 0. The gap on a margin
// ball is exactly h.
class HardInstanceReward : public RewardFamily {
 public:
  HardInstanceReward(std::shared_ptr<const HardInstanceSpec> spec, double sigma)
      : RewardFamily(sigma), spec_(std::move(spec)) {
    if (!spec_) throw std::invalid_argument("HardInstanceReward: null spec");
  }

  std::size_t num_actions() const override { return 2; }

  double mean_reward(std::size_t action,
                     std::span<const double> x) const override {
    if (action >= 2)
      throw std::invalid_argument("HardInstanceReward: action out of range");
    if (action == 1) return 0.0;
    const std::size_t first_margin =
        spec_->variant == HardVariant::Tailed ? 1 : 0;
    for (std::size_t k = 0; k < spec_->num_margin_balls_k; ++k) {
      const auto& c = spec_->centers[first_margin + k];
      double s2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double dd = x[j] - c[j];
        s2 += dd * dd;
      }
      if (std::sqrt(s2) <= spec_->radius_h)
        return static_cast<double>(spec_->signs[k]) * spec_->radius_h;
    }
    return 0.0;
  }

  // The bump means are piecewise constant, hence not Lipschitz; callers pick
  // their own working L.
  std::optional<double> lipschitz() const override { return std::nullopt; }
  std::optional<double> gap_bound() const override { return spec_->radius_h; }

  const HardInstanceSpec& spec() const { return *spec_; }

 private:
  std::shared_ptr<const HardInstanceSpec> spec_;
};

}  // namespace knnbandit
