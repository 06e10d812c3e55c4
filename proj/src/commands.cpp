#include "flowinfer/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "flowinfer/csv.hpp"
#include "flowinfer/diagnostics.hpp"
#include "flowinfer/engine.hpp"
#include "flowinfer/inference.hpp"
#include "flowinfer/kernels.hpp"
#include "flowinfer/stats.hpp"
#include "flowinfer/training.hpp"

namespace flowinfer {

namespace {

namespace fs = std::filesystem;

void apply_threads(const std::optional<std::size_t>& flag,
                   std::size_t config_threads) {
  kernels::set_max_threads(flag.value_or(config_threads));
}

Engine load_engine(const std::string& checkpoint_path,
                   const std::string& config_path, bool force) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  if (!config_path.empty()) {
    RunConfig supplied = RunConfig::load(config_path).resolved();
    if (supplied.hash() != ckpt.config_hash) {
      if (!force) {
        throw ConfigError(
            "config hash mismatch: checkpoint " + hex64(ckpt.config_hash) +
            " vs supplied " + hex64(supplied.hash()) +
            " (pass --force to proceed)");
      }
      std::cerr << "warning: config hash mismatch overridden by --force\n";
    }
  }
  return engine_from_checkpoint(ckpt);
}

std::string checkpoint_label(const Engine& engine) {
  return hex64(engine.config.hash());
}

// Flow-backed posterior sampler over a raw dataset.
Tensor flow_draws(Engine& engine, const Tensor& dataset, std::size_t draws,
                  RngStream& stream) {
  return sample_posterior(dataset, draws, *engine.summary, *engine.flow,
                          *engine.model, stream)
      .draws;
}

struct ValidationSets {
  std::vector<Tensor> truths;    // each [D]
  std::vector<Tensor> datasets;  // each [size, data_dim]
};

ValidationSets simulate_validation_sets(const SimulatorModel& model,
                                        std::size_t count, std::size_t size,
                                        std::uint64_t seed) {
  ValidationSets sets;
  sets.truths.resize(count);
  sets.datasets.resize(count);
  kernels::parallel_for(count, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream(seed, stream_id(StreamPurpose::kValidation, i));
      for (;;) {
        Tensor theta = model.sample_prior(stream);
        try {
          sets.datasets[i] = model.simulate(theta, size, stream);
          sets.truths[i] = theta;
          break;
        } catch (const SimulationRejected&) {
          continue;
        }
      }
    }
  });
  return sets;
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  RunConfig cfg = RunConfig::load(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  Engine engine = build_engine(cfg);
  apply_threads(args.threads, engine.config.threads);

  std::string out_dir = args.out_dir.empty() && !engine.config.out_dir.empty()
                            ? engine.config.out_dir
                            : args.out_dir;
  if (out_dir.empty()) throw ConfigError("no output directory given");
  fs::create_directories(out_dir);

  TrainConfig train_cfg;
  train_cfg.batch_size = engine.config.batch_size;
  train_cfg.epochs = engine.config.epochs;
  train_cfg.iterations_per_epoch = engine.config.iterations_per_epoch;
  train_cfg.n_min = engine.config.n_min;
  train_cfg.n_max = engine.config.n_max;
  train_cfg.learning_rate = engine.config.learning_rate;
  train_cfg.lr_decay = engine.config.lr_decay;
  train_cfg.grad_clip = engine.config.grad_clip;
  train_cfg.seed = engine.config.seed;

  std::ofstream trace(out_dir + "/loss_trace.csv");
  if (!trace) throw IoError("cannot write loss trace");
  trace << "iteration,epoch,n,loss,lr,grad_norm\n";

  std::size_t total = train_cfg.epochs * train_cfg.iterations_per_epoch;
  double window_loss = 0.0;
  std::size_t window_count = 0;
  auto on_iteration = [&](const TraceRow& row) {
    trace << row.iteration << ',' << row.epoch << ',' << row.dataset_size
          << ',' << format_full(row.loss) << ',' << format_full(row.lr) << ','
          << format_full(row.grad_norm) << '\n';
    window_loss += row.loss;
    ++window_count;
  };
  auto on_epoch_end = [&](std::size_t epoch) {
    std::cerr << "epoch " << epoch << "/" << train_cfg.epochs
              << " mean_loss=" << window_loss / std::max<std::size_t>(1, window_count)
              << "\n";
    window_loss = 0.0;
    window_count = 0;
    if (epoch % engine.config.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "/checkpoint_epoch_%03zu.bflw", epoch);
      Checkpoint ckpt = make_checkpoint(engine);
      save_checkpoint(out_dir + name, ckpt);
    }
    trace.flush();
  };

  std::cerr << "training model '" << engine.config.model << "' for " << total
            << " iterations\n";
  train_online(*engine.model, *engine.summary, *engine.flow, engine.scaler,
               train_cfg, on_epoch_end, on_iteration);
  Checkpoint final_ckpt = make_checkpoint(engine);
  save_checkpoint(out_dir + "/checkpoint.bflw", final_ckpt);
  std::cerr << "wrote " << out_dir << "/checkpoint.bflw\n";
  return 0;
}

int cmd_sample(const SampleArgs& args) {
  Engine engine = load_engine(args.checkpoint_path, args.config_path,
                              args.force);
  apply_threads(args.threads, engine.config.threads);
  if (args.data_paths.empty()) throw ConfigError("no --data files given");

  std::vector<Tensor> datasets;
  for (const std::string& path : args.data_paths) {
    datasets.push_back(read_dataset_csv(path, engine.model->data_dim()));
  }
  std::vector<std::string> errors;
  std::vector<PosteriorSample> samples =
      sample_posterior_batch(datasets, args.draws, *engine.summary,
                             *engine.flow, *engine.model, args.seed, &errors);
  for (PosteriorSample& s : samples) s.checkpoint_id = checkpoint_label(engine);

  std::size_t dim = engine.model->param_dim();
  std::vector<std::string> header = {"dataset_id", "draw_index"};
  for (std::size_t j = 0; j < dim; ++j) {
    header.push_back("theta_" + std::to_string(j + 1));
  }
  std::vector<std::vector<double>> rows;
  std::size_t failed = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << "warning: dataset " << i << " failed: " << errors[i] << "\n";
      ++failed;
      continue;
    }
    const Tensor& draws = samples[i].draws;
    for (std::size_t l = 0; l < draws.extent(0); ++l) {
      std::vector<double> row = {static_cast<double>(i),
                                 static_cast<double>(l)};
      for (std::size_t j = 0; j < dim; ++j) row.push_back(draws.at(l, j));
      rows.push_back(std::move(row));
    }
  }
  if (failed == samples.size()) {
    throw ContractError("all datasets failed; nothing to write");
  }
  write_csv(args.out_path, header, rows);
  std::cerr << "wrote " << rows.size() << " draws to " << args.out_path << "\n";
  return 0;
}

int cmd_validate(const ValidateArgs& args) {
  Engine engine = load_engine(args.checkpoint_path, args.config_path,
                              args.force);
  apply_threads(args.threads, engine.config.threads);
  fs::create_directories(args.out_dir);
  std::size_t size = args.dataset_size.value_or(engine.config.n_max);
  std::size_t count = args.num_datasets;
  std::size_t dim = engine.model->param_dim();
  std::vector<std::string> names = engine.model->param_names();

  std::cerr << "validate: simulating " << count << " datasets of size " << size
            << "\n";
  ValidationSets sets =
      simulate_validation_sets(*engine.model, count, size, args.seed);

  std::cerr << "validate: drawing " << args.draws << " posterior samples each\n";
  std::vector<PosteriorSample> samples =
      sample_posterior_batch(sets.datasets, args.draws, *engine.summary,
                             *engine.flow, *engine.model, args.seed);

  // Per-parameter recoveries.
  std::vector<std::vector<double>> truths(dim), means(dim), stds(dim);
  std::vector<Tensor> draw_mats;
  draw_mats.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Tensor& draws = samples[i].draws;
    draw_mats.push_back(draws);
    for (std::size_t j = 0; j < dim; ++j) {
      double mean = 0.0;
      for (std::size_t l = 0; l < draws.extent(0); ++l) mean += draws.at(l, j);
      mean /= static_cast<double>(draws.extent(0));
      double var = 0.0;
      for (std::size_t l = 0; l < draws.extent(0); ++l) {
        double d = draws.at(l, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(draws.extent(0) - 1);
      truths[j].push_back(sets.truths[i][j]);
      means[j].push_back(mean);
      stds[j].push_back(std::sqrt(var));
    }
  }

  Tensor truth_mat({count, dim});
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < dim; ++j) truth_mat.at(i, j) = sets.truths[i][j];
  }
  CalibrationResult calibration = calibration_error(draw_mats, truth_mat);
  if (calibration.low_sample_warning) {
    std::cerr << "warning: fewer than 50 validation datasets; calibration "
                 "estimates are unreliable\n";
  }

  // Re-simulation error at the posterior means. The MMD needs at least two
  // observations per dataset, so single-vector models skip this metric.
  bool has_resim = engine.model->kind() != DatasetKind::kSingleVector;
  double median_mmd = 0.0;
  if (has_resim) {
    std::vector<Tensor> mean_vectors;
    for (std::size_t i = 0; i < count; ++i) {
      Tensor m({dim});
      for (std::size_t j = 0; j < dim; ++j) m[j] = means[j][i];
      mean_vectors.push_back(std::move(m));
    }
    median_mmd =
        resim_error(*engine.model, sets.datasets, mean_vectors, args.seed + 1);
  }

  std::vector<std::vector<std::string>> metric_rows;
  std::ostringstream summary_text;
  summary_text << "validation of " << checkpoint_label(engine) << " (model "
               << engine.config.model << ", " << count << " datasets, size "
               << size << ", " << args.draws << " draws)\n";
  RngStream boot(args.seed, stream_id(StreamPurpose::kTest, 0));
  for (std::size_t j = 0; j < dim; ++j) {
    double nr = nrmse(truths[j], means[j]);
    double nr_se = bootstrap_stderr(nrmse, truths[j], means[j], 1000, boot);
    double r2 = r_squared(truths[j], means[j]);
    double r2_se = bootstrap_stderr(r_squared, truths[j], means[j], 1000, boot);
    double cal = calibration.per_parameter[j];
    metric_rows.push_back({"nrmse", names[j], format_full(nr),
                           format_full(nr_se)});
    metric_rows.push_back({"r_squared", names[j], format_full(r2),
                           format_full(r2_se)});
    metric_rows.push_back({"calibration_error", names[j], format_full(cal), ""});
    summary_text << names[j] << ": nrmse=" << nr << " (se " << nr_se
                 << ") r2=" << r2 << " (se " << r2_se << ") cal_err=" << cal
                 << "\n";
  }
  if (has_resim) {
    metric_rows.push_back({"median_resim_mmd", "", format_full(median_mmd), ""});
    summary_text << "median resimulation mmd: " << median_mmd << "\n";
  }

  if (const auto* mvn = dynamic_cast<const MvnModel*>(engine.model.get())) {
    std::vector<Tensor> observations;
    for (const Tensor& d : sets.datasets) {
      observations.push_back(d.reshaped({d.size()}));
    }
    std::size_t index = 0;
    MvnKlResult kl = mvn_kl_validation(
        *mvn,
        [&](const Tensor&) -> Tensor { return draw_mats[index++]; },
        observations);
    metric_rows.push_back({"mean_kl", "", format_full(kl.mean_kl), ""});
    summary_text << "mean KL(truth || fitted): " << kl.mean_kl;
    if (kl.ridge_flagged) {
      summary_text << " (" << kl.ridge_flagged << " datasets ridged)";
    }
    summary_text << "\n";
  }

  write_csv_text(args.out_dir + "/metrics.csv",
                 {"metric", "parameter", "value", "stderr"}, metric_rows);

  std::vector<std::string> recovery_header = {"dataset_id"};
  for (const std::string& n : names) recovery_header.push_back("true_" + n);
  for (const std::string& n : names) recovery_header.push_back("mean_" + n);
  for (const std::string& n : names) recovery_header.push_back("std_" + n);
  std::vector<std::vector<double>> recovery_rows;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> row = {static_cast<double>(i)};
    for (std::size_t j = 0; j < dim; ++j) row.push_back(truths[j][i]);
    for (std::size_t j = 0; j < dim; ++j) row.push_back(means[j][i]);
    for (std::size_t j = 0; j < dim; ++j) row.push_back(stds[j][i]);
    recovery_rows.push_back(std::move(row));
  }
  write_csv(args.out_dir + "/recovery.csv", recovery_header, recovery_rows);

  std::ofstream summary_file(args.out_dir + "/summary.txt");
  summary_file << summary_text.str();
  std::cerr << summary_text.str();
  return 0;
}

int cmd_sbc(const SbcArgs& args) {
  Engine engine = load_engine(args.checkpoint_path, args.config_path,
                              args.force);
  apply_threads(args.threads, engine.config.threads);
  fs::create_directories(args.out_dir);
  std::size_t size = args.dataset_size.value_or(engine.config.n_max);

  PosteriorFn sampler = [&](const Tensor& dataset, std::size_t draws,
                            RngStream& stream) {
    return flow_draws(engine, dataset, draws, stream);
  };
  std::cerr << "sbc: " << args.rounds << " rounds, " << args.draws
            << " draws, size " << size << "\n";
  SbcResult result = sbc(*engine.model, sampler, args.rounds, args.draws, size,
                         args.bins, args.seed);

  std::vector<std::string> names = engine.model->param_names();
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < result.histograms.size(); ++j) {
    for (std::size_t b = 0; b < result.histograms[j].size(); ++b) {
      rows.push_back({static_cast<double>(j), static_cast<double>(b),
                      static_cast<double>(result.histograms[j][b])});
    }
  }
  write_csv(args.out_dir + "/sbc_ranks.csv",
            {"parameter_index", "bin", "count"}, rows);

  std::ofstream summary(args.out_dir + "/summary.txt");
  for (std::size_t j = 0; j < names.size(); ++j) {
    summary << names[j] << ": chi_square=" << result.chi_square[j]
            << " p=" << result.p_value[j] << "\n";
    std::cerr << names[j] << ": chi_square=" << result.chi_square[j]
              << " p=" << result.p_value[j] << "\n";
  }
  return 0;
}

int cmd_logpdf(const LogpdfArgs& args) {
  Engine engine = load_engine(args.checkpoint_path, args.config_path,
                              args.force);
  apply_threads(args.threads, engine.config.threads);
  Tensor dataset = read_dataset_csv(args.data_path, engine.model->data_dim());
  Tensor thetas = read_dataset_csv(args.theta_path, engine.model->param_dim());

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < thetas.extent(0); ++i) {
    Tensor theta({thetas.extent(1)});
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] = thetas.at(i, j);
    double value = evaluate_log_posterior(theta, dataset, *engine.summary,
                                          *engine.flow, *engine.model);
    rows.push_back({static_cast<double>(i), value});
  }
  write_csv(args.out_path, {"theta_index", "log_density"}, rows);
  std::cerr << "wrote " << rows.size() << " densities to " << args.out_path
            << "\n";
  return 0;
}

}  // namespace flowinfer
