#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "knnbandit/hard_instance.hpp"

namespace knnbandit {

// Collects every problem found in one config rather than stopping at the
// first; what() joins them, errors() keeps them separate.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out = "invalid config (" + std::to_string(errors.size()) +
                      (errors.size() == 1 ? " problem):" : " problems):");
    for (const auto& e : errors) out += "\n  - " + e;
    return out;
  }
  std::vector<std::string> errors_;
};

enum class DistKind { Uniform, Gaussian, StudentT, Cauchy };
enum class RewardKind { LinearPair, TrigPair };
enum class PolicyKind { FixedKnn, AdaptiveKnn, Ucbogram, Abse, Oracle, Random };

struct RunSection {
  int horizon = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  bool operator==(const RunSection&) const = default;
};

struct SyntheticEnvCfg {
  DistKind distribution = DistKind::Uniform;
  std::size_t dim = 1;
  double half_width = 1.0;  // uniform only
  double dof = 4.0;         // student_t only
  RewardKind reward = RewardKind::LinearPair;
  double sigma = 0.5;
  bool operator==(const SyntheticEnvCfg&) const = default;
};

struct HardInstanceEnvCfg {
  HardVariant variant = HardVariant::Bounded;
  std::size_t dim = 1;
  double alpha = 1.0;
  double c_alpha = 1.0;
  double beta = 1.0;   // tailed only
  double c_beta = 1.0; // tailed only
  double sigma = 0.5;
  std::uint64_t instance_seed = 0;
  bool operator==(const HardInstanceEnvCfg&) const = default;
};

struct ClassificationEnvCfg {
  std::string images;
  std::string labels;
  std::size_t subsample = 0;  // 0 keeps the full set
  bool operator==(const ClassificationEnvCfg&) const = default;
};

using EnvSection =
    std::variant<SyntheticEnvCfg, HardInstanceEnvCfg, ClassificationEnvCfg>;

struct FixedKnnParams {
  int k = 1;  // materialized during resolution when left to the default rule
  double lipschitz = 1.0;
  double sigma = 0.5;
  double conf_scale = 1.0;
  bool operator==(const FixedKnnParams&) const = default;
};
struct AdaptiveKnnParams {
  double lipschitz = 1.0;
  double sigma = 0.5;
  double conf_scale = 1.0;
  bool operator==(const AdaptiveKnnParams&) const = default;
};
struct UcbogramParams {
  int bins = 8;
  double clip = 3.0;
  bool operator==(const UcbogramParams&) const = default;
};
struct AbseParams {
  int max_depth = 4;
  double conf_c = 2.0;
  double clip = 3.0;
  double lipschitz = 1.0;
  bool operator==(const AbseParams&) const = default;
};
struct OracleParams {
  bool operator==(const OracleParams&) const = default;
};
struct RandomParams {
  bool operator==(const RandomParams&) const = default;
};

using PolicySection =
    std::variant<FixedKnnParams, AdaptiveKnnParams, UcbogramParams, AbseParams,
                 OracleParams, RandomParams>;

// Fully resolved experiment description. Every default is materialized, so
// serializing and re-parsing reproduces the struct exactly and a CSV header
// built from it suffices to rerun the experiment.
struct ExperimentConfig {
  RunSection run;
  EnvSection env;
  PolicySection policy;
  std::optional<std::string> output_path;
  bool operator==(const ExperimentConfig&) const = default;
};

enum class ProbeKind { Tail, Margin };

struct ProbeConfig {
  std::uint64_t seed = 0;
  ProbeKind kind = ProbeKind::Tail;
  EnvSection env;  // synthetic or hard_instance
  long samples = 1000000;
  double u_min = 1e-4;
  double u_max = 1e-2;
  int points = 8;
  std::size_t action = 0;  // margin probes only
  long horizon = 0;        // hard_instance env sizing (run.T)
  bool operator==(const ProbeConfig&) const = default;
};

struct HardInstanceConfig {
  long horizon = 0;
  std::uint64_t seed = 0;
  std::size_t dim = 1;
  HardVariant variant = HardVariant::Bounded;
  double alpha = 1.0;
  double c_alpha = 1.0;
  double beta = 1.0;
  double c_beta = 1.0;
  bool operator==(const HardInstanceConfig&) const = default;
};

// Default neighbor count for the fixed-k policy: ceil(T^(2/(d+2))), or
// ceil(T^(2/(alpha+3))) when tuned to a known margin exponent. The 1e-9 slack
// keeps pow() jitter at integer powers from bumping the ceiling.
inline int default_fixed_k(int horizon, std::size_t dim) {
  const double x =
      std::pow(static_cast<double>(horizon), 2.0 / (static_cast<double>(dim) + 2.0));
  return std::max(1, static_cast<int>(std::ceil(x - 1e-9)));
}
inline int margin_tuned_k(int horizon, double alpha) {
  const double x = std::pow(static_cast<double>(horizon), 2.0 / (alpha + 3.0));
  return std::max(1, static_cast<int>(std::ceil(x - 1e-9)));
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Flat key/value bag with consumption tracking and error accumulation. Every
// getter records problems instead of throwing; callers throw one ConfigError
// at the end with the full list.
class FlatConfig {
 public:
  static FlatConfig parse(const std::string& text) {
    FlatConfig fc;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const std::size_t eq = t.find('=');
      if (eq == std::string::npos) {
        fc.errors_.push_back("line " + std::to_string(lineno) +
                             ": expected 'key = value', got '" + t + "'");
        continue;
      }
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty()) {
        fc.errors_.push_back("line " + std::to_string(lineno) + ": empty key");
        continue;
      }
      if (fc.kv_.count(key)) {
        fc.errors_.push_back("line " + std::to_string(lineno) +
                             ": duplicate key '" + key + "'");
        continue;
      }
      fc.kv_.emplace(key, value);
    }
    return fc;
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string req_string(const std::string& key) {
    auto v = take(key);
    if (!v || v->empty()) {
      error("missing required key '" + key + "'");
      return {};
    }
    return *v;
  }

  long long req_int(const std::string& key, long long lo, long long hi) {
    auto v = take(key);
    if (!v) {
      error("missing required key '" + key + "'");
      return lo;
    }
    return parse_int(key, *v, lo, hi);
  }
  long long def_int(const std::string& key, long long dflt, long long lo,
                    long long hi) {
    auto v = take(key);
    if (!v) return dflt;
    return parse_int(key, *v, lo, hi);
  }
  std::optional<long long> opt_int(const std::string& key, long long lo,
                                   long long hi) {
    auto v = take(key);
    if (!v) return std::nullopt;
    return parse_int(key, *v, lo, hi);
  }

  std::uint64_t req_u64(const std::string& key) {
    auto v = take(key);
    if (!v) {
      error("missing required key '" + key + "'");
      return 0;
    }
    return parse_u64(key, *v);
  }

  double req_double(const std::string& key, double lo, double hi) {
    auto v = take(key);
    if (!v) {
      error("missing required key '" + key + "'");
      return lo;
    }
    return parse_double(key, *v, lo, hi);
  }
  double def_double(const std::string& key, double dflt, double lo, double hi) {
    auto v = take(key);
    if (!v) return dflt;
    return parse_double(key, *v, lo, hi);
  }
  std::optional<double> opt_double(const std::string& key, double lo,
                                   double hi) {
    auto v = take(key);
    if (!v) return std::nullopt;
    return parse_double(key, *v, lo, hi);
  }

  // Choice keys: value must equal one of the listed tokens; reports the menu.
  int req_choice(const std::string& key,
                 const std::vector<std::string>& tokens) {
    auto v = take(key);
    if (!v) {
      error("missing required key '" + key + "' (one of " + menu(tokens) + ")");
      return 0;
    }
    return match(key, *v, tokens);
  }
  int def_choice(const std::string& key, int dflt,
                 const std::vector<std::string>& tokens) {
    auto v = take(key);
    if (!v) return dflt;
    return match(key, *v, tokens);
  }

  void error(const std::string& msg) { errors_.push_back(msg); }

  // Call after all sections were read; flags leftovers and throws if anything
  // went wrong anywhere.
  void finish() {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k))
        errors_.push_back("unknown or inapplicable key '" + k + "'");
    if (!errors_.empty()) throw ConfigError(std::move(errors_));
  }

 private:
  static std::string menu(const std::vector<std::string>& tokens) {
    std::string m;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) m += ", ";
      m += tokens[i];
    }
    return m;
  }

  int match(const std::string& key, const std::string& value,
            const std::vector<std::string>& tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i)
      if (value == tokens[i]) return static_cast<int>(i);
    error("key '" + key + "': unknown value '" + value + "' (expected one of " +
          menu(tokens) + ")");
    return 0;
  }

  long long parse_int(const std::string& key, const std::string& value,
                      long long lo, long long hi) {
    long long out = 0;
    const auto [p, ec] =
        std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size()) {
      error("key '" + key + "': '" + value + "' is not an integer");
      return lo;
    }
    if (out < lo || out > hi) {
      error("key '" + key + "': " + value + " out of range [" +
            std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return lo;
    }
    return out;
  }

  std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto [p, ec] =
        std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size()) {
      error("key '" + key + "': '" + value +
            "' is not an unsigned 64-bit integer");
      return 0;
    }
    return out;
  }

  double parse_double(const std::string& key, const std::string& value,
                      double lo, double hi) {
    double out = 0.0;
    const auto [p, ec] =
        std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || p != value.data() + value.size() ||
        std::isnan(out)) {
      error("key '" + key + "': '" + value + "' is not a number");
      return lo;
    }
    if (!(out >= lo) || !(out <= hi)) {
      error("key '" + key + "': " + value + " out of range [" +
            fmt_double(lo) + ", " + fmt_double(hi) + "]");
      return lo;
    }
    return out;
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
  std::vector<std::string> errors_;
};

inline constexpr double kInf = 1e300;

inline const std::vector<std::string>& env_kind_tokens() {
  static const std::vector<std::string> t{"synthetic", "hard_instance",
                                          "classification"};
  return t;
}
inline const std::vector<std::string>& dist_tokens() {
  static const std::vector<std::string> t{"uniform", "gaussian", "student_t",
                                          "cauchy"};
  return t;
}
inline const std::vector<std::string>& reward_tokens() {
  static const std::vector<std::string> t{"linear_pair", "trig_pair"};
  return t;
}
inline const std::vector<std::string>& policy_tokens() {
  static const std::vector<std::string> t{"fixed_knn", "adaptive_knn",
                                          "ucbogram", "abse",
                                          "oracle",   "random"};
  return t;
}
inline const std::vector<std::string>& variant_tokens() {
  static const std::vector<std::string> t{"bounded", "tailed"};
  return t;
}
inline const std::vector<std::string>& probe_tokens() {
  static const std::vector<std::string> t{"tail", "margin"};
  return t;
}

// env.* block shared by the experiment and probe schemas. Tail probes need no
// reward family, so the reward key may be optional there.
inline EnvSection read_env_section(FlatConfig& fc, bool allow_classification,
                                   bool reward_required = true) {
  std::vector<std::string> kinds = env_kind_tokens();
  if (!allow_classification) kinds.pop_back();
  const int kind = fc.def_choice("env.kind", 0, kinds);
  if (kind == 0) {
    SyntheticEnvCfg e;
    e.distribution =
        static_cast<DistKind>(fc.req_choice("env.distribution", dist_tokens()));
    e.dim = static_cast<std::size_t>(fc.def_int("env.dim", 1, 1, 4096));
    if (e.distribution == DistKind::Uniform)
      e.half_width = fc.def_double("env.half_width", 1.0, 1e-12, kInf);
    if (e.distribution == DistKind::StudentT)
      e.dof = fc.def_double("env.dof", 4.0, 1e-12, kInf);
    e.reward = static_cast<RewardKind>(
        reward_required ? fc.req_choice("env.reward", reward_tokens())
                        : fc.def_choice("env.reward", 0, reward_tokens()));
    e.sigma = fc.def_double("env.sigma", 0.5, 0.0, kInf);
    return e;
  }
  if (kind == 1) {
    HardInstanceEnvCfg e;
    e.variant = static_cast<HardVariant>(
        fc.req_choice("env.variant", variant_tokens()));
    e.dim = static_cast<std::size_t>(fc.def_int("env.dim", 1, 1, 16));
    e.alpha = fc.req_double("env.alpha", 1e-12, kInf);
    e.c_alpha = fc.req_double("env.c_alpha", 1e-12, kInf);
    if (e.variant == HardVariant::Tailed) {
      e.beta = fc.req_double("env.beta", 1e-12, kInf);
      e.c_beta = fc.req_double("env.c_beta", 1e-12, kInf);
    }
    e.sigma = fc.def_double("env.sigma", 0.5, 0.0, kInf);
    e.instance_seed = fc.has("env.instance_seed")
                          ? fc.req_u64("env.instance_seed")
                          : 0;
    return e;
  }
  ClassificationEnvCfg e;
  e.images = fc.req_string("env.images");
  e.labels = fc.req_string("env.labels");
  e.subsample = static_cast<std::size_t>(
      fc.def_int("env.subsample", 0, 0, 1000000000));
  return e;
}

inline double env_noise_sigma(const EnvSection& env) {
  if (const auto* s = std::get_if<SyntheticEnvCfg>(&env)) return s->sigma;
  if (const auto* h = std::get_if<HardInstanceEnvCfg>(&env)) return h->sigma;
  // Classification rewards live in {0, 1}: subgaussian with sigma 1/2.
  return 0.5;
}

inline std::size_t env_dim_hint(const EnvSection& env) {
  if (const auto* s = std::get_if<SyntheticEnvCfg>(&env)) return s->dim;
  if (const auto* h = std::get_if<HardInstanceEnvCfg>(&env)) return h->dim;
  return 0;  // classification: dim comes from the dataset at load time
}

// Default working Lipschitz constant: the reward family's constant when it has
// one, else 1.
inline double env_default_lipschitz(const EnvSection& env) {
  if (const auto* s = std::get_if<SyntheticEnvCfg>(&env))
    return std::sqrt(static_cast<double>(s->dim));
  return 1.0;
}

}  // namespace detail

// Parses and resolves an experiment config. Collects every problem (unknown
// keys, missing required keys, malformed values, range violations) into a
// single ConfigError.
inline ExperimentConfig parse_config(const std::string& text) {
  detail::FlatConfig fc = detail::FlatConfig::parse(text);

  ExperimentConfig cfg;
  cfg.run.horizon = static_cast<int>(fc.req_int("run.T", 1, 1000000000));
  cfg.run.trials = static_cast<int>(fc.req_int("run.trials", 1, 1000000));
  cfg.run.seed = fc.req_u64("run.seed");
  cfg.env = detail::read_env_section(fc, /*allow_classification=*/true);

  const double noise = detail::env_noise_sigma(cfg.env);
  const double lip = detail::env_default_lipschitz(cfg.env);
  const std::size_t dim_hint = detail::env_dim_hint(cfg.env);

  const int pk = fc.req_choice("policy.kind", detail::policy_tokens());
  switch (static_cast<PolicyKind>(pk)) {
    case PolicyKind::FixedKnn: {
      FixedKnnParams p;
      const std::optional<long long> k = fc.opt_int("policy.k", 1, 1000000000);
      const std::optional<double> k_alpha =
          fc.opt_double("policy.k_alpha", 1e-12, detail::kInf);
      if (k && k_alpha)
        fc.error("policy.k and policy.k_alpha are mutually exclusive");
      if (k)
        p.k = static_cast<int>(*k);
      else if (k_alpha)
        p.k = margin_tuned_k(cfg.run.horizon, *k_alpha);
      else if (dim_hint > 0)
        p.k = default_fixed_k(cfg.run.horizon, dim_hint);
      else
        p.k = default_fixed_k(cfg.run.horizon, 784);  // classification default
      p.lipschitz = fc.def_double("policy.lipschitz", lip, 1e-12, detail::kInf);
      p.sigma = fc.def_double("policy.sigma", noise, 0.0, detail::kInf);
      p.conf_scale =
          fc.def_double("policy.conf_scale", 1.0, 1e-12, detail::kInf);
      cfg.policy = p;
      break;
    }
    case PolicyKind::AdaptiveKnn: {
      AdaptiveKnnParams p;
      p.lipschitz = fc.def_double("policy.lipschitz", lip, 1e-12, detail::kInf);
      p.sigma = fc.def_double("policy.sigma", noise, 0.0, detail::kInf);
      p.conf_scale =
          fc.def_double("policy.conf_scale", 1.0, 1e-12, detail::kInf);
      cfg.policy = p;
      break;
    }
    case PolicyKind::Ucbogram: {
      UcbogramParams p;
      p.bins = static_cast<int>(fc.def_int("policy.bins", 8, 1, 4096));
      p.clip = fc.def_double("policy.clip", 3.0, 1e-12, detail::kInf);
      cfg.policy = p;
      break;
    }
    case PolicyKind::Abse: {
      AbseParams p;
      p.max_depth = static_cast<int>(fc.def_int("policy.max_depth", 4, 0, 24));
      p.conf_c = fc.def_double("policy.conf_c", 2.0, 1e-12, detail::kInf);
      p.clip = fc.def_double("policy.clip", 3.0, 1e-12, detail::kInf);
      p.lipschitz = fc.def_double("policy.lipschitz", lip, 1e-12, detail::kInf);
      cfg.policy = p;
      break;
    }
    case PolicyKind::Oracle:
      cfg.policy = OracleParams{};
      break;
    case PolicyKind::Random:
      cfg.policy = RandomParams{};
      break;
  }

  if (auto out = fc.take("output.path"); out && !out->empty())
    cfg.output_path = *out;

  fc.finish();
  return cfg;
}

inline ProbeConfig parse_probe_config(const std::string& text) {
  detail::FlatConfig fc = detail::FlatConfig::parse(text);
  ProbeConfig cfg;
  cfg.seed = fc.req_u64("run.seed");
  cfg.kind = static_cast<ProbeKind>(
      fc.req_choice("probe.kind", detail::probe_tokens()));
  cfg.env = detail::read_env_section(
      fc, /*allow_classification=*/false,
      /*reward_required=*/cfg.kind == ProbeKind::Margin);
  if (std::holds_alternative<HardInstanceEnvCfg>(cfg.env))
    cfg.horizon = fc.req_int("run.T", 1, 1000000000);
  cfg.samples = fc.def_int("probe.samples", 1000000, 10000, 4000000000LL);
  cfg.u_min = fc.def_double("probe.u_min", 1e-4, 1e-300, detail::kInf);
  cfg.u_max = fc.def_double("probe.u_max", 1e-2, 1e-300, detail::kInf);
  if (!(cfg.u_max > cfg.u_min))
    fc.error("probe.u_max must exceed probe.u_min");
  cfg.points = static_cast<int>(fc.def_int("probe.points", 8, 2, 10000));
  if (cfg.kind == ProbeKind::Margin)
    cfg.action = static_cast<std::size_t>(fc.req_int("probe.action", 0, 4096));
  fc.finish();
  return cfg;
}

inline HardInstanceConfig parse_hard_config(const std::string& text) {
  detail::FlatConfig fc = detail::FlatConfig::parse(text);
  HardInstanceConfig cfg;
  cfg.horizon = fc.req_int("run.T", 1, 1000000000);
  cfg.seed = fc.req_u64("run.seed");
  cfg.dim = static_cast<std::size_t>(fc.def_int("env.dim", 1, 1, 16));
  cfg.variant = static_cast<HardVariant>(
      fc.req_choice("env.variant", detail::variant_tokens()));
  cfg.alpha = fc.req_double("env.alpha", 1e-12, detail::kInf);
  cfg.c_alpha = fc.req_double("env.c_alpha", 1e-12, detail::kInf);
  if (cfg.variant == HardVariant::Tailed) {
    cfg.beta = fc.req_double("env.beta", 1e-12, detail::kInf);
    cfg.c_beta = fc.req_double("env.c_beta", 1e-12, detail::kInf);
  }
  fc.finish();
  return cfg;
}

namespace detail {
inline void emit(std::string& out, const std::string& key,
                 const std::string& value) {
  out += key;
  out += " = ";
  out += value;
  out += '\n';
}
inline void emit(std::string& out, const std::string& key, double v) {
  emit(out, key, fmt_double(v));
}
inline void emit(std::string& out, const std::string& key, long long v) {
  emit(out, key, std::to_string(v));
}
inline void emit_u64(std::string& out, const std::string& key,
                     std::uint64_t v) {
  emit(out, key, std::to_string(v));
}

inline void emit_env(std::string& out, const EnvSection& env) {
  if (const auto* s = std::get_if<SyntheticEnvCfg>(&env)) {
    emit(out, "env.kind", std::string("synthetic"));
    emit(out, "env.distribution",
         dist_tokens()[static_cast<std::size_t>(s->distribution)]);
    emit(out, "env.dim", static_cast<long long>(s->dim));
    if (s->distribution == DistKind::Uniform)
      emit(out, "env.half_width", s->half_width);
    if (s->distribution == DistKind::StudentT) emit(out, "env.dof", s->dof);
    emit(out, "env.reward",
         reward_tokens()[static_cast<std::size_t>(s->reward)]);
    emit(out, "env.sigma", s->sigma);
  } else if (const auto* h = std::get_if<HardInstanceEnvCfg>(&env)) {
    emit(out, "env.kind", std::string("hard_instance"));
    emit(out, "env.variant", std::string(to_string(h->variant)));
    emit(out, "env.dim", static_cast<long long>(h->dim));
    emit(out, "env.alpha", h->alpha);
    emit(out, "env.c_alpha", h->c_alpha);
    if (h->variant == HardVariant::Tailed) {
      emit(out, "env.beta", h->beta);
      emit(out, "env.c_beta", h->c_beta);
    }
    emit(out, "env.sigma", h->sigma);
    emit_u64(out, "env.instance_seed", h->instance_seed);
  } else {
    const auto& c = std::get<ClassificationEnvCfg>(env);
    emit(out, "env.kind", std::string("classification"));
    emit(out, "env.images", c.images);
    emit(out, "env.labels", c.labels);
    emit(out, "env.subsample", static_cast<long long>(c.subsample));
  }
}
}  // namespace detail

inline PolicyKind policy_kind(const PolicySection& p) {
  return static_cast<PolicyKind>(p.index());
}

// Canonical flat text for a resolved config; parse_config() of this text
// reproduces the struct exactly (doubles are printed with 17 significant
// digits).
inline std::string to_flat_text(const ExperimentConfig& cfg) {
  std::string out;
  detail::emit(out, "run.T", static_cast<long long>(cfg.run.horizon));
  detail::emit(out, "run.trials", static_cast<long long>(cfg.run.trials));
  detail::emit_u64(out, "run.seed", cfg.run.seed);
  detail::emit_env(out, cfg.env);
  const auto& tokens = detail::policy_tokens();
  detail::emit(out, "policy.kind", tokens[cfg.policy.index()]);
  if (const auto* p = std::get_if<FixedKnnParams>(&cfg.policy)) {
    detail::emit(out, "policy.k", static_cast<long long>(p->k));
    detail::emit(out, "policy.lipschitz", p->lipschitz);
    detail::emit(out, "policy.sigma", p->sigma);
    detail::emit(out, "policy.conf_scale", p->conf_scale);
  } else if (const auto* p = std::get_if<AdaptiveKnnParams>(&cfg.policy)) {
    detail::emit(out, "policy.lipschitz", p->lipschitz);
    detail::emit(out, "policy.sigma", p->sigma);
    detail::emit(out, "policy.conf_scale", p->conf_scale);
  } else if (const auto* p = std::get_if<UcbogramParams>(&cfg.policy)) {
    detail::emit(out, "policy.bins", static_cast<long long>(p->bins));
    detail::emit(out, "policy.clip", p->clip);
  } else if (const auto* p = std::get_if<AbseParams>(&cfg.policy)) {
    detail::emit(out, "policy.max_depth", static_cast<long long>(p->max_depth));
    detail::emit(out, "policy.conf_c", p->conf_c);
    detail::emit(out, "policy.clip", p->clip);
    detail::emit(out, "policy.lipschitz", p->lipschitz);
  }
  if (cfg.output_path) detail::emit(out, "output.path", *cfg.output_path);
  return out;
}

inline std::string to_flat_text(const ProbeConfig& cfg) {
  std::string out;
  detail::emit_u64(out, "run.seed", cfg.seed);
  if (std::holds_alternative<HardInstanceEnvCfg>(cfg.env))
    detail::emit(out, "run.T", static_cast<long long>(cfg.horizon));
  detail::emit(out, "probe.kind",
               detail::probe_tokens()[static_cast<std::size_t>(cfg.kind)]);
  detail::emit_env(out, cfg.env);
  detail::emit(out, "probe.samples", static_cast<long long>(cfg.samples));
  detail::emit(out, "probe.u_min", cfg.u_min);
  detail::emit(out, "probe.u_max", cfg.u_max);
  detail::emit(out, "probe.points", static_cast<long long>(cfg.points));
  if (cfg.kind == ProbeKind::Margin)
    detail::emit(out, "probe.action", static_cast<long long>(cfg.action));
  return out;
}

// FNV-1a hash of the canonical text; tags result files with the exact config.
inline std::string config_digest(const std::string& canonical_text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace knnbandit
