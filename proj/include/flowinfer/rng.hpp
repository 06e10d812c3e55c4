#pragma once

#include <array>
#include <cstdint>

#include "flowinfer/tensor.hpp"

namespace flowinfer {

// Counter-based random stream (Philox 4x32-10). Two streams with equal
// (seed, stream_id) produce identical sequences; distinct stream_ids are
// statistically independent, so simulators on different threads each own a
// stream without any coordination.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  double uniform01();  // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);
  double gaussian(double mean, double stddev);
  std::int64_t poisson(double rate);
  std::int64_t binomial(std::int64_t trials, double p);
  // Integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t counter) const;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  bool has_gauss_spare_ = false;
  double gauss_spare_ = 0.0;
};

// Well-known stream-id partition so every consumer of randomness in a run is
// reproducible from the single run seed.
enum class StreamPurpose : std::uint64_t {
  kNetInit = 1,
  kPermutations = 2,
  kBatchSize = 3,
  kPriorDraw = 4,
  kSimNoise = 5,
  kInference = 6,
  kValidation = 7,
  kResimulate = 8,
  kTest = 9,
};

// Layout: purpose (8 bits) | major index (40 bits) | minor index (16 bits).
std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t major = 0,
                        std::uint64_t minor = 0);

// Tensor-valued draws. Parameters are validated (sigma >= 0, rate >= 0,
// 0 <= p <= 1, trials >= 0) and a ParameterError is raised otherwise.
Tensor sample_gaussian(RngStream& stream, Shape shape, double mean = 0.0,
                       double stddev = 1.0);
Tensor sample_uniform(RngStream& stream, Shape shape, double lo, double hi);
Tensor sample_poisson(RngStream& stream, Shape shape, double rate);
Tensor sample_binomial(RngStream& stream, Shape shape, std::int64_t trials,
                       double p);

}  // namespace flowinfer
