#pragma once

#include <optional>
#include <string>
#include <vector>

namespace flowinfer {

struct TrainArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::optional<std::size_t> threads;
};

struct SampleArgs {
  std::string checkpoint_path;
  std::vector<std::string> data_paths;  // one dataset per file
  std::size_t draws = 2000;
  std::string out_path;
  std::uint64_t seed = 1;
  std::optional<std::size_t> threads;
  std::string config_path;  // optional compatibility check
  bool force = false;
};

struct ValidateArgs {
  std::string checkpoint_path;
  std::size_t num_datasets = 100;
  std::size_t draws = 2000;
  std::string out_dir;
  std::optional<std::size_t> dataset_size;  // default: the config's n_max
  std::uint64_t seed = 1;
  std::optional<std::size_t> threads;
  std::string config_path;
  bool force = false;
};

struct SbcArgs {
  std::string checkpoint_path;
  std::size_t rounds = 200;
  std::size_t draws = 1999;
  std::size_t bins = 20;
  std::string out_dir;
  std::optional<std::size_t> dataset_size;
  std::uint64_t seed = 1;
  std::optional<std::size_t> threads;
  std::string config_path;
  bool force = false;
};

struct LogpdfArgs {
  std::string checkpoint_path;
  std::string data_path;
  std::string theta_path;
  std::string out_path;
  std::optional<std::size_t> threads;
  std::string config_path;
  bool force = false;
};

int cmd_train(const TrainArgs& args);
int cmd_sample(const SampleArgs& args);
int cmd_validate(const ValidateArgs& args);
int cmd_sbc(const SbcArgs& args);
int cmd_logpdf(const LogpdfArgs& args);

}  // namespace flowinfer
