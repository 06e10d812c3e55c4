#pragma once

#include <cstddef>
#include <functional>

namespace flowinfer::kernels {

// Worker cap for the compute kernels. 0 means hardware concurrency.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Splits [0, total) into contiguous chunks, one per worker. Each index is
// written by exactly one worker, so results do not depend on the thread count.
void parallel_for(std::size_t total, std::size_t grain,
                  const std::function<void(std::size_t, std::size_t)>& body);

// C[m,n] = A[m,k] * B[k,n]           (+= when accumulate)
void matmul_nn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate);
// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate);
// C[k,n] = A[m,k]^T * B[m,n]
void matmul_tn(const double* a, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n, bool accumulate);

// in [batch, c_in, len], kernel [c_out, c_in, width], out [batch, c_out, olen]
// with olen = (len - width) / stride + 1 (valid padding).
void conv1d_forward(const double* in, const double* kernel, double* out,
                    std::size_t batch, std::size_t c_in, std::size_t len,
                    std::size_t c_out, std::size_t width, std::size_t stride);
void conv1d_backward_input(const double* dout, const double* kernel,
                           double* din, std::size_t batch, std::size_t c_in,
                           std::size_t len, std::size_t c_out,
                           std::size_t width, std::size_t stride);
void conv1d_backward_kernel(const double* dout, const double* in,
                            double* dkernel, std::size_t batch,
                            std::size_t c_in, std::size_t len,
                            std::size_t c_out, std::size_t width,
                            std::size_t stride);

}  // namespace flowinfer::kernels
