#include "flowinfer/rng.hpp"

#include <cmath>

namespace flowinfer {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr, std::uint32_t k0,
                         std::uint32_t k1) {
  std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  std::array<std::uint32_t, 4> out;
  out[0] = static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0;
  out[1] = static_cast<std::uint32_t>(p1);
  out[2] = static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1;
  out[3] = static_cast<std::uint32_t>(p0);
  ctr = out;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

std::array<std::uint32_t, 4> RngStream::block(std::uint64_t counter) const {
  std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter),
      static_cast<std::uint32_t>(counter >> 32),
      static_cast<std::uint32_t>(stream_id_),
      static_cast<std::uint32_t>(stream_id_ >> 32),
  };
  std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return ctr;
}

std::uint32_t RngStream::next_u32() {
  if (buf_pos_ >= 4) {
    buf_ = block(counter_++);
    buf_pos_ = 0;
  }
  return buf_[buf_pos_++];
}

std::uint64_t RngStream::next_u64() {
  std::uint64_t hi = next_u32();
  std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(lo <= hi)) throw ParameterError("uniform: lo > hi");
  return lo + (hi - lo) * uniform01();
}

double RngStream::gaussian(double mean, double stddev) {
  if (!(stddev >= 0.0)) throw ParameterError("gaussian: stddev < 0");
  if (has_gauss_spare_) {
    has_gauss_spare_ = false;
    return mean + stddev * gauss_spare_;
  }
  // Box-Muller; 1 - u keeps the log argument strictly positive.
  double u1 = uniform01();
  double u2 = uniform01();
  double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
  double angle = 2.0 * M_PI * u2;
  gauss_spare_ = radius * std::sin(angle);
  has_gauss_spare_ = true;
  return mean + stddev * radius * std::cos(angle);
}

std::int64_t RngStream::poisson(double rate) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw ParameterError("poisson: rate must be finite and >= 0");
  }
  if (rate == 0.0) return 0;
  if (rate < 30.0) {
    // Multiplicative inversion.
    double limit = std::exp(-rate);
    double prod = uniform01();
    std::int64_t count = 0;
    while (prod > limit) {
      prod *= uniform01();
      ++count;
    }
    return count;
  }
  // PTRS transformed rejection (Hormann 1993) for large rates.
  const double b = 0.931 + 2.53 * std::sqrt(rate);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_rate = std::log(rate);
  for (;;) {
    double u = uniform01() - 0.5;
    double v = uniform01();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    double lhs = std::log(v) + std::log(inv_alpha) -
                 std::log(a / (us * us) + b);
    double rhs = k * log_rate - rate - std::lgamma(k + 1.0);
    if (lhs <= rhs) return static_cast<std::int64_t>(k);
  }
}

std::int64_t RngStream::binomial(std::int64_t trials, double p) {
  if (trials < 0) throw ParameterError("binomial: trials < 0");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("binomial: p outside [0,1]");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  if (p > 0.5) return trials - binomial(trials, 1.0 - p);

  const double n = static_cast<double>(trials);
  if (n * p < 10.0) {
    // CDF inversion via the ratio recurrence.
    const double q = 1.0 - p;
    const double ratio = p / q;
    double prob = std::pow(q, n);
    double cum = prob;
    double u = uniform01();
    std::int64_t k = 0;
    while (u > cum && k < trials) {
      ++k;
      prob *= ratio * (n - static_cast<double>(k) + 1.0) / static_cast<double>(k);
      cum += prob;
    }
    return k;
  }
  // BTRS transformed rejection (Hormann 1993).
  const double q = 1.0 - p;
  const double spq = std::sqrt(n * p * q);
  const double b = 1.15 + 2.53 * spq;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = n * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double alpha = (2.83 + 5.1 / b) * spq;
  const double lpq = std::log(p / q);
  const double m = std::floor((n + 1.0) * p);
  const double h = std::lgamma(m + 1.0) + std::lgamma(n - m + 1.0);
  for (;;) {
    double u = uniform01() - 0.5;
    double v = uniform01();
    double us = 0.5 - std::fabs(u);
    double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > n) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
    double lhs = std::log(v * alpha / (a / (us * us) + b));
    double rhs = h - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                 (k - m) * lpq;
    if (lhs <= rhs) return static_cast<std::int64_t>(k);
  }
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (lo > hi) throw ParameterError("uniform_int: lo > hi");
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
  // Rejection to avoid modulo bias.
  std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return lo + static_cast<std::int64_t>(draw % span);
}

std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t major,
                        std::uint64_t minor) {
  return (static_cast<std::uint64_t>(purpose) << 56) |
         ((major & 0xFFFFFFFFFFull) << 16) | (minor & 0xFFFFull);
}

Tensor sample_gaussian(RngStream& stream, Shape shape, double mean,
                       double stddev) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = stream.gaussian(mean, stddev);
  return t;
}

Tensor sample_uniform(RngStream& stream, Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = stream.uniform(lo, hi);
  return t;
}

Tensor sample_poisson(RngStream& stream, Shape shape, double rate) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<double>(stream.poisson(rate));
  }
  return t;
}

Tensor sample_binomial(RngStream& stream, Shape shape, std::int64_t trials,
                       double p) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<double>(stream.binomial(trials, p));
  }
  return t;
}

}  // namespace flowinfer
