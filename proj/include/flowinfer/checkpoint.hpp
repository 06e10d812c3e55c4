#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowinfer/tensor.hpp"

namespace flowinfer {

// Binary network container. Layout:
//   bytes 0..3   magic "BFLW"
//   bytes 4..7   format version, u32 little-endian
//   bytes 8..15  header length in bytes, u64 little-endian
//   header       UTF-8 structured text: config hash, full run config,
//                permutation indices, tensor table (name, shape, dtype,
//                payload byte offset)
//   payload      raw little-endian f64 tensor data, in table order
// Save -> load -> save is byte-identical.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_hash = 0;
  std::string config_text;  // canonical RunConfig serialization, verbatim
  std::vector<std::vector<std::size_t>> permutations;
  std::vector<std::string> tensor_names;
  std::vector<Tensor> tensors;  // parallel to tensor_names

  const Tensor& tensor(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a 64 over a file's bytes (output determinism checks).
std::uint64_t file_hash(const std::string& path);

}  // namespace flowinfer
