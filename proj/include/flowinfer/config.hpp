#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace flowinfer {

// Run configuration, read from a `key = value` text file. Unknown keys are
// rejected; every field has a documented default. The canonical serialization
// (fixed key order, normalized values) is what gets hashed and embedded in
// checkpoints.
struct RunConfig {
  std::string model;  // mvn | gmm | ricker | sir | lv | lv_handcrafted
  std::uint64_t seed = 1;

  // flow
  std::size_t num_coupling_blocks = 5;
  std::size_t subnet_hidden_units = 64;
  std::size_t subnet_hidden_layers = 2;
  double clamp = 1.9;

  // summary network ("auto" picks the model's default architecture)
  std::string summary_kind = "auto";  // identity | invariant | temporal | handcrafted
  std::size_t summary_dim = 128;
  std::size_t summary_head_hidden = 64;
  std::size_t invariant_equivariant_layers = 2;
  std::size_t invariant_hidden_units = 64;
  std::vector<std::size_t> temporal_channels = {32, 64, 64};
  std::size_t temporal_min_length = 16;

  // training
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t iterations_per_epoch = 1000;
  std::size_t n_min = 0;  // 0 = model default
  std::size_t n_max = 0;
  double learning_rate = 1e-3;
  double lr_decay = 0.95;
  double grad_clip = 10.0;
  std::size_t checkpoint_every = 1;  // epochs
  std::size_t threads = 0;           // 0 = hardware concurrency
  std::string out_dir;

  // model constants
  std::size_t mvn_dim = 5;
  std::string mvn_cov = "kms";  // kms | identity
  double gmm_center_radius = 3.0;
  double gmm_cluster_std = 0.5;
  bool ricker_dummy = true;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  // Fills model-dependent defaults (dataset size range, summary kind/dim)
  // and validates the result.
  RunConfig resolved() const;
  std::string canonical_text() const;
  std::uint64_t hash() const;  // FNV-1a 64 of the canonical text
};

std::uint64_t fnv1a64(const std::string& text);
std::string hex64(std::uint64_t value);

}  // namespace flowinfer
