#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "knnbandit/rng.hpp"

namespace knnbandit {

// Context marginal P_X. Implementations provide exact sampling and a pointwise
// density; the density feeds the tail/margin probes and the oracle checks, so
// it must match the sampler exactly (not up to a constant).
class ContextDistribution {
 public:
  virtual ~ContextDistribution() = default;
  virtual std::size_t dim() const = 0;
  virtual void sample(Rng& rng, std::span<double> out) const = 0;
  virtual double pdf(std::span<const double> x) const = 0;

  std::vector<double> sample_point(Rng& rng) const {
    std::vector<double> x(dim());
    sample(rng, x);
    return x;
  }

 protected:
  void check_out(std::span<const double> x) const {
    if (x.size() != dim())
      throw std::invalid_argument("ContextDistribution: span size " +
                                  std::to_string(x.size()) + " != dim " +
                                  std::to_string(dim()));
  }
};

class UniformBox : public ContextDistribution {
 public:
  UniformBox(std::size_t dim, double half_width)
      : dim_(dim), half_width_(half_width) {
    if (dim == 0) throw std::invalid_argument("UniformBox: dim must be >= 1");
    if (!(half_width > 0.0))
      throw std::invalid_argument("UniformBox: half_width must be > 0");
  }

  std::size_t dim() const override { return dim_; }
  double half_width() const { return half_width_; }

  void sample(Rng& rng, std::span<double> out) const override {
    check_out(out);
    std::uniform_real_distribution<double> u(-half_width_, half_width_);
    for (double& v : out) v = u(rng);
  }

  double pdf(std::span<const double> x) const override {
    check_out(x);
    for (double v : x)
      if (std::abs(v) > half_width_) return 0.0;
    return std::pow(1.0 / (2.0 * half_width_), static_cast<double>(dim_));
  }

 private:
  std::size_t dim_;
  double half_width_;
};

class StandardGaussian : public ContextDistribution {
 public:
  explicit StandardGaussian(std::size_t dim) : dim_(dim) {
    if (dim == 0)
      throw std::invalid_argument("StandardGaussian: dim must be >= 1");
  }

  std::size_t dim() const override { return dim_; }

  void sample(Rng& rng, std::span<double> out) const override {
    check_out(out);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : out) v = n(rng);
  }

  double pdf(std::span<const double> x) const override {
    check_out(x);
    double q = 0.0;
    for (double v : x) q += v * v;
    const double norm =
        std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(dim_));
    return norm * std::exp(-0.5 * q);
  }

 private:
  std::size_t dim_;
};

// Product of independent Student-t coordinates with `dof` degrees of freedom.
class StudentT : public ContextDistribution {
 public:
  StudentT(std::size_t dim, double dof) : dim_(dim), dof_(dof) {
    if (dim == 0) throw std::invalid_argument("StudentT: dim must be >= 1");
    if (!(dof > 0.0)) throw std::invalid_argument("StudentT: dof must be > 0");
    // log of Gamma((nu+1)/2) / (sqrt(nu pi) Gamma(nu/2))
    log_norm_1d_ = std::lgamma(0.5 * (dof_ + 1.0)) - std::lgamma(0.5 * dof_) -
                   0.5 * std::log(dof_ * std::numbers::pi);
  }

  std::size_t dim() const override { return dim_; }
  double dof() const { return dof_; }

  void sample(Rng& rng, std::span<double> out) const override {
    check_out(out);
    std::student_t_distribution<double> t(dof_);
    for (double& v : out) v = t(rng);
  }

  double pdf(std::span<const double> x) const override {
    check_out(x);
    double lp = 0.0;
    for (double v : x)
      lp += log_norm_1d_ -
            0.5 * (dof_ + 1.0) * std::log1p(v * v / dof_);
    return std::exp(lp);
  }

 private:
  std::size_t dim_;
  double dof_;
  double log_norm_1d_;
};

// Product of independent standard Cauchy coordinates.
class CauchyDistribution : public ContextDistribution {
 public:
  explicit CauchyDistribution(std::size_t dim) : dim_(dim) {
    if (dim == 0)
      throw std::invalid_argument("CauchyDistribution: dim must be >= 1");
  }

  std::size_t dim() const override { return dim_; }

  void sample(Rng& rng, std::span<double> out) const override {
    check_out(out);
    std::cauchy_distribution<double> c(0.0, 1.0);
    for (double& v : out) v = c(rng);
  }

  double pdf(std::span<const double> x) const override {
    check_out(x);
    double p = 1.0;
    for (double v : x) p *= 1.0 / (std::numbers::pi * (1.0 + v * v));
    return p;
  }

 private:
  std::size_t dim_;
};

// Product of arbitrary one-dimensional marginals, one per coordinate.
class ProductDistribution : public ContextDistribution {
 public:
  explicit ProductDistribution(
      std::vector<std::shared_ptr<const ContextDistribution>> parts)
      : parts_(std::move(parts)) {
    if (parts_.empty())
      throw std::invalid_argument("ProductDistribution: needs >= 1 part");
    for (const auto& p : parts_) {
      if (!p) throw std::invalid_argument("ProductDistribution: null part");
      if (p->dim() != 1)
        throw std::invalid_argument(
            "ProductDistribution: every part must be one-dimensional");
    }
  }

  std::size_t dim() const override { return parts_.size(); }

  void sample(Rng& rng, std::span<double> out) const override {
    check_out(out);
    for (std::size_t j = 0; j < parts_.size(); ++j)
      parts_[j]->sample(rng, out.subspan(j, 1));
  }

  double pdf(std::span<const double> x) const override {
    check_out(x);
    double p = 1.0;
    for (std::size_t j = 0; j < parts_.size(); ++j)
      p *= parts_[j]->pdf(x.subspan(j, 1));
    return p;
  }

 private:
  std::vector<std::shared_ptr<const ContextDistribution>> parts_;
};

// Mean-reward map eta_a plus the reward-noise scale. Deterministic given
// (a, x); sample_reward adds N(0, sigma^2) noise from the caller's stream.
class RewardFamily {
 public:
  explicit RewardFamily(double sigma) : sigma_(sigma) {
    if (!(sigma >= 0.0))
      throw std::invalid_argument("RewardFamily: sigma must be >= 0");
  }
  virtual ~RewardFamily() = default;

  virtual std::size_t num_actions() const = 0;
  virtual double mean_reward(std::size_t action,
                             std::span<const double> x) const = 0;
  // Lipschitz constant of every eta_a when one is known.
  virtual std::optional<double> lipschitz() const = 0;
  // Uniform bound M on the gaps max_a eta_a - eta_b when one is known.
  virtual std::optional<double> gap_bound() const = 0;

  double noise_sigma() const { return sigma_; }

  double optimal_reward(std::span<const double> x) const {
    double best = mean_reward(0, x);
    for (std::size_t a = 1; a < num_actions(); ++a)
      best = std::max(best, mean_reward(a, x));
    return best;
  }

  double sample_reward(std::size_t action, std::span<const double> x,
                       Rng& rng) const {
    const double mean = mean_reward(action, x);
    if (sigma_ == 0.0) return mean;
    std::normal_distribution<double> n(0.0, sigma_);
    return mean + n(rng);
  }

 private:
  double sigma_;
};

// Two arms with means +-s where s = sum of the coordinates. Margin parameter
// alpha = 1 under every context distribution used here.
class LinearPair : public RewardFamily {
 public:
  LinearPair(std::size_t dim, double sigma) : RewardFamily(sigma), dim_(dim) {
    if (dim == 0) throw std::invalid_argument("LinearPair: dim must be >= 1");
  }

  std::size_t num_actions() const override { return 2; }
  std::size_t dim() const { return dim_; }

  double mean_reward(std::size_t action,
                     std::span<const double> x) const override {
    check(action, x);
    double s = 0.0;
    for (double v : x) s += v;
    return action == 0 ? s : -s;
  }

  std::optional<double> lipschitz() const override {
    return std::sqrt(static_cast<double>(dim_));
  }
  std::optional<double> gap_bound() const override { return std::nullopt; }

 private:
  void check(std::size_t action, std::span<const double> x) const {
    if (action >= 2) throw std::invalid_argument("LinearPair: action out of range");
    if (x.size() != dim_)
      throw std::invalid_argument("LinearPair: context dim mismatch");
  }
  std::size_t dim_;
};

// Two arms with means sin(s) and cos(s), s = sum of the coordinates. Bounded
// means with infinitely many decision boundaries; pairs with heavy tails to
// exercise the far-field behavior of the policies.
class TrigPair : public RewardFamily {
 public:
  TrigPair(std::size_t dim, double sigma) : RewardFamily(sigma), dim_(dim) {
    if (dim == 0) throw std::invalid_argument("TrigPair: dim must be >= 1");
  }

  std::size_t num_actions() const override { return 2; }
  std::size_t dim() const { return dim_; }

  double mean_reward(std::size_t action,
                     std::span<const double> x) const override {
    check(action, x);
    double s = 0.0;
    for (double v : x) s += v;
    return action == 0 ? std::sin(s) : std::cos(s);
  }

  std::optional<double> lipschitz() const override {
    return std::sqrt(static_cast<double>(dim_));
  }
  std::optional<double> gap_bound() const override { return 2.0; }

 private:
  void check(std::size_t action, std::span<const double> x) const {
    if (action >= 2) throw std::invalid_argument("TrigPair: action out of range");
    if (x.size() != dim_)
      throw std::invalid_argument("TrigPair: context dim mismatch");
  }
  std::size_t dim_;
};

// Full bandit environment: context draws, reward draws, and the ground-truth
// quantities the regret harness needs. One instance per trial; instances own
// no RNG, every draw consumes the caller-supplied stream.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t num_actions() const = 0;
  virtual std::vector<double> sample_context(Rng& rng) = 0;
  virtual double mean_reward(std::size_t action,
                             std::span<const double> x) const = 0;
  virtual double optimal_reward(std::span<const double> x) const = 0;
  virtual double sample_reward(std::size_t action, std::span<const double> x,
                               Rng& rng) = 0;
  virtual double noise_sigma() const = 0;
  virtual std::optional<double> lipschitz() const = 0;
};

class SyntheticEnv : public Environment {
 public:
  SyntheticEnv(std::shared_ptr<const ContextDistribution> dist,
               std::shared_ptr<const RewardFamily> family)
      : dist_(std::move(dist)), family_(std::move(family)) {
    if (!dist_ || !family_)
      throw std::invalid_argument("SyntheticEnv: null component");
  }

  std::size_t dim() const override { return dist_->dim(); }
  std::size_t num_actions() const override { return family_->num_actions(); }

  std::vector<double> sample_context(Rng& rng) override {
    return dist_->sample_point(rng);
  }
  double mean_reward(std::size_t action,
                     std::span<const double> x) const override {
    return family_->mean_reward(action, x);
  }
  double optimal_reward(std::span<const double> x) const override {
    return family_->optimal_reward(x);
  }
  double sample_reward(std::size_t action, std::span<const double> x,
                       Rng& rng) override {
    return family_->sample_reward(action, x, rng);
  }
  double noise_sigma() const override { return family_->noise_sigma(); }
  std::optional<double> lipschitz() const override {
    return family_->lipschitz();
  }

  const ContextDistribution& distribution() const { return *dist_; }
  const RewardFamily& family() const { return *family_; }

 private:
  std::shared_ptr<const ContextDistribution> dist_;
  std::shared_ptr<const RewardFamily> family_;
};

}  // namespace knnbandit
