// Command-line front end: run / sweep / probe / hard-instance / mnist.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "knnbandit/commands.hpp"

namespace {

void add_common(CLI::App* cmd, knnbandit::CommandOptions& opts,
                bool out_required) {
  cmd->add_option("--config", opts.config_path, "flat key=value config file")
      ->required();
  auto* out = cmd->add_option("--out", opts.out_path, "output path");
  if (out_required) out->required();
  cmd->add_option("--threads", opts.threads, "worker threads for trials")
      ->check(CLI::Range(1, 256));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nearest-neighbor UCB contextual bandit simulator"};
  app.require_subcommand(1);

  knnbandit::CommandOptions run_opts;
  auto* run = app.add_subcommand("run", "run one experiment, write regret CSV");
  add_common(run, run_opts, /*out_required=*/false);
  run->add_flag("--per-trial", run_opts.per_trial,
                "also write a per-trial trace CSV");

  knnbandit::CommandOptions sweep_opts;
  std::vector<int> horizons{250, 500, 1000, 2000, 4000};
  auto* sweep = app.add_subcommand(
      "sweep", "run across horizons, fit the regret exponent");
  add_common(sweep, sweep_opts, /*out_required=*/true);
  sweep->add_option("--horizons", horizons,
                    "horizons T to sweep (need >= 3)")
      ->delimiter(',');

  knnbandit::CommandOptions probe_opts;
  auto* probe = app.add_subcommand(
      "probe", "tail-exponent or margin probe of a context distribution");
  add_common(probe, probe_opts, /*out_required=*/true);

  knnbandit::CommandOptions hard_opts;
  auto* hard = app.add_subcommand(
      "hard-instance", "build a lower-bound instance, audit its constraints");
  add_common(hard, hard_opts, /*out_required=*/true);

  knnbandit::CommandOptions mnist_opts;
  std::string mnist_images, mnist_labels;
  long mnist_subsample = -1;
  auto* mnist = app.add_subcommand(
      "mnist", "classification bandit on an IDX image/label pair");
  add_common(mnist, mnist_opts, /*out_required=*/false);
  mnist->add_flag("--per-trial", mnist_opts.per_trial,
                  "also write a per-trial trace CSV");
  mnist->add_option("--images", mnist_images, "IDX image file (env.images)");
  mnist->add_option("--labels", mnist_labels, "IDX label file (env.labels)");
  mnist->add_option("--subsample", mnist_subsample,
                    "keep only the first N examples (env.subsample)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return knnbandit::cmd_run(run_opts);
    if (sweep->parsed()) return knnbandit::cmd_sweep(sweep_opts, horizons);
    if (probe->parsed()) return knnbandit::cmd_probe(probe_opts);
    if (hard->parsed()) return knnbandit::cmd_hard_instance(hard_opts);
    if (mnist->parsed())
      return knnbandit::cmd_mnist(mnist_opts, mnist_images, mnist_labels,
                                  mnist_subsample);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
