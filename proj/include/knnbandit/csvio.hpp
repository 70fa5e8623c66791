#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "knnbandit/config.hpp"
#include "knnbandit/probes.hpp"
#include "knnbandit/simulate.hpp"

namespace knnbandit {

// Data values get 10 significant digits: enough to compare runs exactly in
// practice while keeping files compact. Config echoes in headers use the
// full-precision formatting from to_flat_text.
inline std::string fmt_data(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Writes via a temp file + rename so readers never observe a partial file; on
// any failure the temp file is removed and the original path left untouched.
inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  const std::string tmp = path + ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
      out << content;
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

// Header block: one '# key = value' line per resolved config key. Only
// dot-qualified keys are config echoes; informational lines (no dot in the
// key) are ignored by the round-trip parser.
inline std::string csv_header_block(const std::string& flat_config_text) {
  std::string out;
  std::istringstream in(flat_config_text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out += "# " + line + "\n";
  return out;
}

// Recovers the flat config text embedded in a CSV header; keys without a dot
// are informational and skipped.
inline std::string csv_header_to_flat_text(const std::string& csv_text) {
  std::string out;
  std::istringstream in(csv_text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) continue;
    const std::string body = line.substr(2);
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = detail::trim(body.substr(0, eq));
    if (key.find('.') == std::string::npos) continue;  // informational
    out += body + "\n";
  }
  return out;
}

inline ExperimentConfig parse_csv_header_config(const std::string& csv_text) {
  return parse_config(csv_header_to_flat_text(csv_text));
}

inline std::string render_aggregate_csv(const ExperimentConfig& cfg,
                                        const AggregateResult& agg) {
  const std::string flat = to_flat_text(cfg);
  std::string out = csv_header_block(flat);
  out += "# config_digest = " + config_digest(flat) + "\n";
  out += "t,mean_cum_regret,std_cum_regret,n_trials\n";
  for (std::size_t t = 0; t < agg.mean_cum_regret.size(); ++t) {
    out += std::to_string(t + 1);
    out += ',';
    out += fmt_data(agg.mean_cum_regret[t]);
    out += ',';
    out += fmt_data(agg.std_cum_regret[t]);
    out += ',';
    out += std::to_string(agg.n_trials);
    out += '\n';
  }
  return out;
}

inline std::string render_per_trial_csv(const ExperimentConfig& cfg,
                                        const std::vector<RegretTrace>& traces) {
  const std::string flat = to_flat_text(cfg);
  std::string out = csv_header_block(flat);
  out += "# config_digest = " + config_digest(flat) + "\n";
  out += "trial,t,action,inst_regret,cum_regret\n";
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const RegretTrace& tr = traces[i];
    for (std::size_t t = 0; t < tr.actions.size(); ++t) {
      out += std::to_string(i);
      out += ',';
      out += std::to_string(t + 1);
      out += ',';
      out += std::to_string(tr.actions[t]);
      out += ',';
      out += fmt_data(tr.inst_regret[t]);
      out += ',';
      out += fmt_data(tr.cum_regret[t]);
      out += '\n';
    }
  }
  return out;
}

// Tail probes carry the fitted slope as an informational line; margin probes
// have no single summary statistic.
inline std::string render_probe_csv(const ProbeConfig& cfg,
                                    const std::vector<double>& u,
                                    const std::vector<double>& p,
                                    std::optional<double> fitted_slope) {
  const std::string flat = to_flat_text(cfg);
  std::string out = csv_header_block(flat);
  out += "# config_digest = " + config_digest(flat) + "\n";
  if (fitted_slope)
    out += "# fitted_slope = " + detail::fmt_double(*fitted_slope) + "\n";
  out += "u,p_estimate\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    out += fmt_data(u[i]);
    out += ',';
    out += fmt_data(p[i]);
    out += '\n';
  }
  return out;
}

struct SweepPoint {
  int horizon = 0;
  double final_mean_cum_regret = 0.0;
  double final_std_cum_regret = 0.0;
  int n_trials = 0;
};

inline std::string render_sweep_summary_csv(const ExperimentConfig& base_cfg,
                                            const std::vector<SweepPoint>& pts,
                                            double fitted_exponent) {
  const std::string flat = to_flat_text(base_cfg);
  std::string out = csv_header_block(flat);
  out += "# config_digest = " + config_digest(flat) + "\n";
  out += "# fitted_exponent = " + detail::fmt_double(fitted_exponent) + "\n";
  out += "T,final_mean_cum_regret,final_std_cum_regret,n_trials\n";
  for (const SweepPoint& p : pts) {
    out += std::to_string(p.horizon);
    out += ',';
    out += fmt_data(p.final_mean_cum_regret);
    out += ',';
    out += fmt_data(p.final_std_cum_regret);
    out += ',';
    out += std::to_string(p.n_trials);
    out += '\n';
  }
  return out;
}

}  // namespace knnbandit
