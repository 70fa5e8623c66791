#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "knnbandit/environments.hpp"
#include "knnbandit/rng.hpp"

namespace knnbandit {

class DegenerateProbeError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// n log-spaced grid points from lo to hi inclusive, strictly increasing.
inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo))
    throw std::invalid_argument("log_spaced: need 0 < lo < hi");
  if (n < 2) throw std::invalid_argument("log_spaced: need n >= 2");
  std::vector<double> u(n);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) /
                              static_cast<double>(n - 1));
  u.front() = lo;
  u.back() = hi;
  return u;
}

namespace detail {
inline void check_probe_inputs(std::span<const double> u_grid,
                               long n_samples) {
  if (u_grid.size() < 2)
    throw std::invalid_argument("probe: u_grid needs >= 2 points");
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    if (!(u_grid[i] > 0.0))
      throw std::invalid_argument("probe: u_grid values must be > 0");
    if (i > 0 && !(u_grid[i] > u_grid[i - 1]))
      throw std::invalid_argument("probe: u_grid must be strictly increasing");
  }
  if (n_samples < 10000)
    throw std::invalid_argument("probe: n_samples must be >= 10000");
}

// Least-squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("ols_slope: x values are all equal");
  return sxy / sxx;
}
}  // namespace detail

struct TailProbeResult {
  std::vector<double> u;         // probed levels
  std::vector<double> p_hat;     // Monte Carlo estimates of P(f(X) <= u)
  double slope = 0.0;            // OLS slope of log p_hat vs log u
};

// Estimates the small-density tail exponent beta: P(f(X) <= u) ~ C u^beta.
// Draws n_samples contexts once, evaluates the density at each, and turns the
// sorted density values into P estimates for every level by binary search.
// The slope is fit over the levels with nonzero estimates.
inline TailProbeResult tail_exponent_probe(const ContextDistribution& dist,
                                           std::span<const double> u_grid,
                                           long n_samples, Rng& rng) {
  detail::check_probe_inputs(u_grid, n_samples);
  std::vector<double> f(static_cast<std::size_t>(n_samples));
  std::vector<double> x(dist.dim());
  for (double& fi : f) {
    dist.sample(rng, x);
    fi = dist.pdf(x);
  }
  std::sort(f.begin(), f.end());

  TailProbeResult res;
  res.u.assign(u_grid.begin(), u_grid.end());
  res.p_hat.resize(u_grid.size());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    const auto cnt = std::upper_bound(f.begin(), f.end(), u_grid[i]) - f.begin();
    res.p_hat[i] =
        static_cast<double>(cnt) / static_cast<double>(n_samples);
    if (res.p_hat[i] > 0.0) {
      lx.push_back(std::log(u_grid[i]));
      ly.push_back(std::log(res.p_hat[i]));
    }
  }
  if (lx.size() < 2)
    throw DegenerateProbeError(
        lx.empty() ? "tail probe: every P(f(X) <= u) estimate is zero"
                   : "tail probe: fewer than two nonzero estimates");
  res.slope = detail::ols_slope(lx, ly);
  return res;
}

// Empirical margin function: estimates P(0 < gap_a(X) < u) for each level,
// where gap_a(x) = max_b eta_b(x) - eta_a(x) for the probed action. Both
// inequalities are strict, so point masses at gap = 0 or gap = u never count.
// Verifies margin conditions of the form P <= C_alpha u^alpha.
inline std::vector<double> margin_probe(const RewardFamily& family,
                                        const ContextDistribution& dist,
                                        std::size_t action,
                                        std::span<const double> u_grid,
                                        long n_samples, Rng& rng) {
  detail::check_probe_inputs(u_grid, n_samples);
  if (action >= family.num_actions())
    throw std::invalid_argument("margin_probe: action out of range");
  std::vector<double> gaps(static_cast<std::size_t>(n_samples));
  std::vector<double> x(dist.dim());
  for (double& g : gaps) {
    dist.sample(rng, x);
    g = family.optimal_reward(x) - family.mean_reward(action, x);
  }
  std::sort(gaps.begin(), gaps.end());
  std::vector<double> p(u_grid.size());
  const auto zero_end = std::upper_bound(gaps.begin(), gaps.end(), 0.0);
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    // Strict on both sides: 0 < gap < u.
    const auto cnt = std::lower_bound(zero_end, gaps.end(), u_grid[i]) -
                     zero_end;
    p[i] = static_cast<double>(cnt) / static_cast<double>(n_samples);
  }
  return p;
}

}  // namespace knnbandit
