// Command-line driver: train a posterior estimator on a simulator, then
// sample, validate, calibrate, or evaluate densities against checkpoints.

#include <iostream>

#include <CLI11.hpp>

#include "flowinfer/commands.hpp"
#include "flowinfer/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"flowinfer: amortized simulation-based posterior inference"};
  app.require_subcommand(1);

  flowinfer::TrainArgs train_args;
  std::uint64_t seed_flag = 0;
  std::size_t threads_flag = 0;

  CLI::App* train = app.add_subcommand("train", "train networks on a simulator");
  train->add_option("--config", train_args.config_path, "run config file")
      ->required();
  train->add_option("--out", train_args.out_dir, "output directory");
  CLI::Option* train_seed = train->add_option("--seed", seed_flag,
                                              "override the config seed");
  CLI::Option* train_threads =
      train->add_option("--threads", threads_flag, "worker thread cap");

  flowinfer::SampleArgs sample_args;
  CLI::App* sample =
      app.add_subcommand("sample", "draw posterior samples for datasets");
  sample->add_option("--checkpoint", sample_args.checkpoint_path)->required();
  sample->add_option("--data", sample_args.data_paths, "dataset CSV (repeatable)")
      ->required();
  sample->add_option("--draws", sample_args.draws, "draws per dataset");
  sample->add_option("--out", sample_args.out_path, "output CSV")->required();
  sample->add_option("--seed", sample_args.seed);
  CLI::Option* sample_threads = sample->add_option("--threads", threads_flag);
  sample->add_option("--config", sample_args.config_path,
                     "config to check against the checkpoint");
  sample->add_flag("--force", sample_args.force,
                   "proceed despite a config hash mismatch");

  flowinfer::ValidateArgs validate_args;
  std::size_t size_flag = 0;
  CLI::App* validate = app.add_subcommand(
      "validate", "recovery/calibration metrics on simulated validation sets");
  validate->add_option("--checkpoint", validate_args.checkpoint_path)
      ->required();
  validate->add_option("--num-datasets", validate_args.num_datasets);
  validate->add_option("--draws", validate_args.draws);
  validate->add_option("--out", validate_args.out_dir)->required();
  CLI::Option* validate_size =
      validate->add_option("--size", size_flag, "dataset size (default n_max)");
  validate->add_option("--seed", validate_args.seed);
  CLI::Option* validate_threads = validate->add_option("--threads", threads_flag);
  validate->add_option("--config", validate_args.config_path);
  validate->add_flag("--force", validate_args.force);

  flowinfer::SbcArgs sbc_args;
  CLI::App* sbc = app.add_subcommand(
      "sbc", "simulation-based calibration rank histograms");
  sbc->add_option("--checkpoint", sbc_args.checkpoint_path)->required();
  sbc->add_option("--rounds", sbc_args.rounds);
  sbc->add_option("--draws", sbc_args.draws);
  sbc->add_option("--bins", sbc_args.bins);
  sbc->add_option("--out", sbc_args.out_dir)->required();
  CLI::Option* sbc_size = sbc->add_option("--size", size_flag);
  sbc->add_option("--seed", sbc_args.seed);
  CLI::Option* sbc_threads = sbc->add_option("--threads", threads_flag);
  sbc->add_option("--config", sbc_args.config_path);
  sbc->add_flag("--force", sbc_args.force);

  flowinfer::LogpdfArgs logpdf_args;
  CLI::App* logpdf = app.add_subcommand(
      "logpdf", "posterior log densities of candidate parameters");
  logpdf->add_option("--checkpoint", logpdf_args.checkpoint_path)->required();
  logpdf->add_option("--data", logpdf_args.data_path)->required();
  logpdf->add_option("--theta", logpdf_args.theta_path)->required();
  logpdf->add_option("--out", logpdf_args.out_path)->required();
  CLI::Option* logpdf_threads = logpdf->add_option("--threads", threads_flag);
  logpdf->add_option("--config", logpdf_args.config_path);
  logpdf->add_flag("--force", logpdf_args.force);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (*train_seed) train_args.seed = seed_flag;
      if (*train_threads) train_args.threads = threads_flag;
      return flowinfer::cmd_train(train_args);
    }
    if (sample->parsed()) {
      if (*sample_threads) sample_args.threads = threads_flag;
      return flowinfer::cmd_sample(sample_args);
    }
    if (validate->parsed()) {
      if (*validate_size) validate_args.dataset_size = size_flag;
      if (*validate_threads) validate_args.threads = threads_flag;
      return flowinfer::cmd_validate(validate_args);
    }
    if (sbc->parsed()) {
      if (*sbc_size) sbc_args.dataset_size = size_flag;
      if (*sbc_threads) sbc_args.threads = threads_flag;
      return flowinfer::cmd_sbc(sbc_args);
    }
    if (logpdf->parsed()) {
      if (*logpdf_threads) logpdf_args.threads = threads_flag;
      return flowinfer::cmd_logpdf(logpdf_args);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
