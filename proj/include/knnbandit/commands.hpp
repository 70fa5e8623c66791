#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "knnbandit/builders.hpp"
#include "knnbandit/csvio.hpp"

namespace knnbandit {

struct CommandOptions {
  std::string config_path;
  std::string out_path;
  int threads = 1;
  bool per_trial = false;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("read failed: " + path);
  return ss.str();
}

// Replaces (or appends) one flat-config assignment at the text level, so
// re-parsing re-runs the full defaulting logic for the new value.
inline std::string patch_config_key(const std::string& text,
                                    const std::string& key,
                                    const std::string& value) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string t = line;
    if (!t.empty() && t.back() == '\r') t.pop_back();
    const std::string trimmed = detail::trim(t);
    if (!trimmed.empty() && trimmed[0] != '#') {
      const std::size_t eq = trimmed.find('=');
      if (eq != std::string::npos &&
          detail::trim(trimmed.substr(0, eq)) == key)
        continue;  // drop the old assignment
    }
    out += t + "\n";
  }
  out += key + " = " + value + "\n";
  return out;
}

// "runs/x.csv" -> "runs/x_trials.csv"; extensionless paths get the suffix
// appended.
inline std::string per_trial_path(const std::string& out_path) {
  const std::filesystem::path p(out_path);
  std::filesystem::path q = p;
  q.replace_extension();
  std::string stem = q.string() + "_trials";
  return stem + p.extension().string();
}

namespace detail {
inline std::string resolve_out_path(const CommandOptions& opts,
                                    const std::optional<std::string>& cfg_out) {
  if (!opts.out_path.empty()) return opts.out_path;
  if (cfg_out && !cfg_out->empty()) return *cfg_out;
  throw std::runtime_error(
      "no output path: pass --out or set output.path in the config");
}
}  // namespace detail

// run: one experiment, aggregate CSV (+ optional per-trial CSV).
inline int cmd_run(const CommandOptions& opts) {
  ExperimentConfig cfg = parse_config(read_text_file(opts.config_path));
  const std::string out = detail::resolve_out_path(opts, cfg.output_path);
  cfg.output_path = out;  // header then documents where results landed
  ExperimentPlan plan = make_plan(cfg, opts.threads, opts.per_trial);
  const ExperimentResult res = run_experiment(plan);
  write_file_atomic(out, render_aggregate_csv(cfg, res.aggregate));
  std::cout << "wrote " << out << " (T=" << cfg.run.horizon
            << ", trials=" << cfg.run.trials << ", final mean cum regret "
            << fmt_data(res.aggregate.mean_cum_regret.back()) << ")\n";
  if (opts.per_trial) {
    const std::string tp = per_trial_path(out);
    write_file_atomic(tp, render_per_trial_csv(cfg, res.traces));
    std::cout << "wrote " << tp << "\n";
  }
  return 0;
}

// sweep: the same config across horizons; per-horizon CSVs plus a summary
// with the fitted regret exponent. `out` is a directory.
inline int cmd_sweep(const CommandOptions& opts,
                     const std::vector<int>& horizons) {
  if (horizons.size() < 3)
    throw std::runtime_error("sweep needs >= 3 horizons to fit an exponent");
  const std::string raw = read_text_file(opts.config_path);
  if (opts.out_path.empty())
    throw std::runtime_error("sweep requires --out DIRECTORY");
  std::filesystem::create_directories(opts.out_path);

  std::vector<SweepPoint> pts;
  std::vector<std::pair<double, double>> fit_pts;
  std::vector<std::pair<std::string, std::string>> outputs;  // path -> body
  std::optional<ExperimentConfig> base_cfg;
  for (const int horizon : horizons) {
    const std::string patched =
        patch_config_key(raw, "run.T", std::to_string(horizon));
    ExperimentConfig cfg = parse_config(patched);
    const std::string out = (std::filesystem::path(opts.out_path) /
                             ("sweep_T" + std::to_string(horizon) + ".csv"))
                                .string();
    cfg.output_path = out;
    if (!base_cfg) base_cfg = cfg;
    ExperimentPlan plan = make_plan(cfg, opts.threads, false);
    const ExperimentResult res = run_experiment(plan);
    outputs.emplace_back(out, render_aggregate_csv(cfg, res.aggregate));
    SweepPoint p;
    p.horizon = horizon;
    p.final_mean_cum_regret = res.aggregate.mean_cum_regret.back();
    p.final_std_cum_regret = res.aggregate.std_cum_regret.back();
    p.n_trials = res.aggregate.n_trials;
    pts.push_back(p);
    fit_pts.emplace_back(static_cast<double>(horizon),
                         p.final_mean_cum_regret);
    std::cout << "T=" << horizon << ": final mean cum regret "
              << fmt_data(p.final_mean_cum_regret) << "\n";
  }
  const double exponent = fit_regret_exponent(fit_pts);
  const std::string summary =
      (std::filesystem::path(opts.out_path) / "sweep_summary.csv").string();
  outputs.emplace_back(summary,
                       render_sweep_summary_csv(*base_cfg, pts, exponent));
  // All horizons succeeded; only now touch the filesystem, so a failed sweep
  // leaves no partial set behind.
  for (const auto& [path, body] : outputs) write_file_atomic(path, body);
  std::cout << "fitted exponent " << fmt_data(exponent) << "; wrote "
            << summary << "\n";
  return 0;
}

// probe: tail-exponent or margin probe of a context distribution.
inline int cmd_probe(const CommandOptions& opts) {
  const ProbeConfig cfg = parse_probe_config(read_text_file(opts.config_path));
  if (opts.out_path.empty()) throw std::runtime_error("probe requires --out");

  std::shared_ptr<const ContextDistribution> dist;
  std::shared_ptr<const RewardFamily> family;
  if (const auto* s = std::get_if<SyntheticEnvCfg>(&cfg.env)) {
    dist = make_distribution(*s);
    family = make_reward_family(*s);
  } else {
    const auto& h = std::get<HardInstanceEnvCfg>(cfg.env);
    auto spec = make_hard_spec(cfg.horizon, h);
    dist = std::make_shared<HardInstanceDistribution>(spec);
    family = std::make_shared<HardInstanceReward>(spec, h.sigma);
  }

  const std::vector<double> grid =
      log_spaced(cfg.u_min, cfg.u_max, static_cast<std::size_t>(cfg.points));
  Rng rng(cfg.seed);
  if (cfg.kind == ProbeKind::Tail) {
    const TailProbeResult res =
        tail_exponent_probe(*dist, grid, cfg.samples, rng);
    write_file_atomic(opts.out_path,
                      render_probe_csv(cfg, res.u, res.p_hat, res.slope));
    std::cout << "fitted_slope = " << fmt_data(res.slope) << "; wrote "
              << opts.out_path << "\n";
  } else {
    const std::vector<double> p =
        margin_probe(*family, *dist, cfg.action, grid, cfg.samples, rng);
    write_file_atomic(opts.out_path,
                      render_probe_csv(cfg, grid, p, std::nullopt));
    std::cout << "wrote " << opts.out_path << "\n";
  }
  return 0;
}

inline nlohmann::json hard_spec_to_json(const HardInstanceSpec& s) {
  nlohmann::json j;
  j["dim"] = s.dim;
  j["variant"] = to_string(s.variant);
  j["horizon"] = s.horizon;
  j["alpha"] = s.alpha;
  j["c_alpha"] = s.c_alpha;
  j["beta"] = s.beta;
  j["c_beta"] = s.c_beta;
  j["radius_h"] = s.radius_h;
  j["radius_center"] = s.radius_center;
  j["tail_mass_m"] = s.tail_mass_m;
  j["num_margin_balls_k"] = s.num_margin_balls_k;
  j["num_balls_b"] = s.num_balls_b;
  j["signs"] = s.signs;
  j["centers"] = s.centers;
  return j;
}

inline HardInstanceSpec hard_spec_from_json(const nlohmann::json& j) {
  HardInstanceSpec s;
  s.dim = j.at("dim").get<std::size_t>();
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "bounded")
    s.variant = HardVariant::Bounded;
  else if (variant == "tailed")
    s.variant = HardVariant::Tailed;
  else
    throw std::runtime_error("hard_spec_from_json: unknown variant '" +
                             variant + "'");
  s.horizon = j.at("horizon").get<long>();
  s.alpha = j.at("alpha").get<double>();
  s.c_alpha = j.at("c_alpha").get<double>();
  s.beta = j.at("beta").get<double>();
  s.c_beta = j.at("c_beta").get<double>();
  s.radius_h = j.at("radius_h").get<double>();
  s.radius_center = j.at("radius_center").get<double>();
  s.tail_mass_m = j.at("tail_mass_m").get<double>();
  s.num_margin_balls_k = j.at("num_margin_balls_k").get<std::size_t>();
  s.num_balls_b = j.at("num_balls_b").get<std::size_t>();
  s.signs = j.at("signs").get<std::vector<int>>();
  s.centers = j.at("centers").get<std::vector<std::vector<double>>>();
  return s;
}

// hard-instance: build one lower-bound instance, print the constraint audit,
// write the instance as JSON.
inline int cmd_hard_instance(const CommandOptions& opts) {
  const HardInstanceConfig cfg =
      parse_hard_config(read_text_file(opts.config_path));
  if (opts.out_path.empty())
    throw std::runtime_error("hard-instance requires --out");
  Rng rng(cfg.seed);
  const HardInstanceSpec spec =
      build_hard_instance(cfg.horizon, cfg.alpha, cfg.c_alpha, cfg.beta,
                          cfg.c_beta, cfg.dim, cfg.variant, rng);
  const std::vector<ConstraintCheck> checks = check_constraints(spec);

  nlohmann::json j = hard_spec_to_json(spec);
  nlohmann::json jc = nlohmann::json::array();
  for (const ConstraintCheck& c : checks)
    jc.push_back({{"name", c.name},
                  {"satisfied", c.satisfied},
                  {"lhs", c.lhs},
                  {"rhs", c.rhs}});
  j["constraints"] = jc;
  j["all_satisfied"] = all_satisfied(checks);
  write_file_atomic(opts.out_path, j.dump(2) + "\n");

  std::printf("%-18s %-9s %14s %14s\n", "constraint", "ok", "lhs", "rhs");
  for (const ConstraintCheck& c : checks)
    std::printf("%-18s %-9s %14.6g %14.6g\n", c.name.c_str(),
                c.satisfied ? "yes" : "NO", c.lhs, c.rhs);
  std::printf("variant=%s d=%zu T=%ld h=%.6g m=%.6g K=%zu B=%zu -> %s\n",
              to_string(spec.variant), spec.dim, spec.horizon, spec.radius_h,
              spec.tail_mass_m, spec.num_margin_balls_k, spec.num_balls_b,
              opts.out_path.c_str());
  return 0;
}

// mnist: classification bandit on an IDX image/label pair. Flags override the
// corresponding env.* keys, then the run pipeline takes over.
inline int cmd_mnist(const CommandOptions& opts, const std::string& images,
                     const std::string& labels, long subsample) {
  std::string text = read_text_file(opts.config_path);
  text = patch_config_key(text, "env.kind", "classification");
  if (!images.empty()) text = patch_config_key(text, "env.images", images);
  if (!labels.empty()) text = patch_config_key(text, "env.labels", labels);
  if (subsample >= 0)
    text = patch_config_key(text, "env.subsample", std::to_string(subsample));

  ExperimentConfig cfg = parse_config(text);
  const std::string out = detail::resolve_out_path(opts, cfg.output_path);
  cfg.output_path = out;
  ExperimentPlan plan = make_plan(cfg, opts.threads, opts.per_trial);
  const ExperimentResult res = run_experiment(plan);
  write_file_atomic(out, render_aggregate_csv(cfg, res.aggregate));
  std::cout << "wrote " << out << " (T=" << cfg.run.horizon
            << ", trials=" << cfg.run.trials << ", final mean cum regret "
            << fmt_data(res.aggregate.mean_cum_regret.back()) << ")\n";
  if (opts.per_trial) {
    const std::string tp = per_trial_path(out);
    write_file_atomic(tp, render_per_trial_csv(cfg, res.traces));
    std::cout << "wrote " << tp << "\n";
  }
  return 0;
}

}  // namespace knnbandit
