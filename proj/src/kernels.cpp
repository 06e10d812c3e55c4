#include "flowinfer/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <thread>
#include <vector>

namespace flowinfer::kernels {

namespace {
std::atomic<std::size_t> g_max_threads{0};

std::size_t effective_threads() {
  std::size_t n = g_max_threads.load(std::memory_order_relaxed);
  if (n == 0) {
    n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
  }
  return n;
}
}  // namespace

void set_max_threads(std::size_t n) { g_max_threads.store(n); }

std::size_t max_threads() { return effective_threads(); }

void parallel_for(std::size_t total, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (total == 0) return;
  std::size_t workers = effective_threads();
  if (grain == 0) grain = 1;
  workers = std::min(workers, (total + grain - 1) / grain);
  if (workers <= 1) {
    body(0, total);
    return;
  }
  std::size_t chunk = (total + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(total, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(body, begin, end);
  }
  body(0, std::min(total, chunk));
  for (auto& t : pool) t.join();
}

void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate) {
  parallel_for(m, 8 + 4096 / (k * n + 1), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      double* crow = c + i * n;
      if (!accumulate) std::memset(crow, 0, n * sizeof(double));
      const double* arow = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        double av = arow[p];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate) {
  parallel_for(m, 8 + 4096 / (k * n + 1), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      const double* arow = a + i * k;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b + j * k;
        double sum = 0.0;
        for (std::size_t p = 0; p < k; ++p) sum += arow[p] * brow[p];
        crow[j] = accumulate ? crow[j] + sum : sum;
      }
    }
  });
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate) {
  parallel_for(k, 4 + 4096 / (m * n + 1), [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      double* crow = c + i * n;
      if (!accumulate) std::memset(crow, 0, n * sizeof(double));
      for (std::size_t p = 0; p < m; ++p) {
        double av = a[p * k + i];
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  });
}

namespace {

// Unrolls one batch item into a [c_in*width, olen] patch matrix so the
// convolutions run through the matmul kernels.
void im2col(const double* bin, double* cols, std::size_t c_in,
            std::size_t len, std::size_t width, std::size_t stride,
            std::size_t olen) {
  for (std::size_t ci = 0; ci < c_in; ++ci) {
    const double* irow = bin + ci * len;
    for (std::size_t w = 0; w < width; ++w) {
      double* crow = cols + (ci * width + w) * olen;
      for (std::size_t t = 0; t < olen; ++t) crow[t] = irow[t * stride + w];
    }
  }
}

}  // namespace

void conv1d_forward(const double* in, const double* kernel, double* out,
                    std::size_t batch, std::size_t c_in, std::size_t len,
                    std::size_t c_out, std::size_t width, std::size_t stride) {
  std::size_t olen = (len - width) / stride + 1;
  std::size_t patch = c_in * width;
  parallel_for(batch, 1, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> cols(patch * olen);
    for (std::size_t b = b0; b < b1; ++b) {
      im2col(in + b * c_in * len, cols.data(), c_in, len, width, stride, olen);
      // out_b [c_out, olen] = kernel [c_out, patch] x cols [patch, olen]
      matmul_nn(kernel, cols.data(), out + b * c_out * olen, c_out, patch,
                olen, false);
    }
  });
}

void conv1d_backward_input(const double* dout, const double* kernel,
                           double* din, std::size_t batch, std::size_t c_in,
                           std::size_t len, std::size_t c_out,
                           std::size_t width, std::size_t stride) {
  std::size_t olen = (len - width) / stride + 1;
  std::size_t patch = c_in * width;
  // Partitioned over batch so each input cell is written by one worker only.
  parallel_for(batch, 1, [&](std::size_t b0, std::size_t b1) {
    std::vector<double> dcols(patch * olen);
    for (std::size_t b = b0; b < b1; ++b) {
      // dcols [patch, olen] = kernel^T [patch, c_out] x dout_b [c_out, olen]
      matmul_tn(kernel, dout + b * c_out * olen, dcols.data(), c_out, patch,
                olen, false);
      double* dbin = din + b * c_in * len;
      for (std::size_t ci = 0; ci < c_in; ++ci) {
        double* irow = dbin + ci * len;
        for (std::size_t w = 0; w < width; ++w) {
          const double* crow = dcols.data() + (ci * width + w) * olen;
          for (std::size_t t = 0; t < olen; ++t) {
            irow[t * stride + w] += crow[t];
          }
        }
      }
    }
  });
}

void conv1d_backward_kernel(const double* dout, const double* in,
                            double* dkernel, std::size_t batch,
                            std::size_t c_in, std::size_t len,
                            std::size_t c_out, std::size_t width,
                            std::size_t stride) {
  std::size_t olen = (len - width) / stride + 1;
  std::size_t patch = c_in * width;
  // Serial over the batch: every item accumulates into the same kernel
  // gradient, and a fixed order keeps results thread-count independent.
  std::vector<double> cols(patch * olen);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(in + b * c_in * len, cols.data(), c_in, len, width, stride, olen);
    // dkernel [c_out, patch] += dout_b [c_out, olen] x cols^T [olen, patch]
    matmul_nt(dout + b * c_out * olen, cols.data(), dkernel, c_out, olen,
              patch, true);
  }
}

}  // namespace flowinfer::kernels
