#include "flowinfer/linalg.hpp"

#include <cmath>

#include "flowinfer/errors.hpp"

namespace flowinfer::linalg {

namespace {
void require_square(const Tensor& a, const char* what) {
  if (a.rank() != 2 || a.extent(0) != a.extent(1)) {
    throw DimensionError(std::string(what) + ": expected square matrix, got " +
                         shape_str(a.shape()));
  }
}
}  // namespace

Tensor cholesky(const Tensor& spd) {
  require_square(spd, "cholesky");
  std::size_t n = spd.extent(0);
  Tensor low({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = spd.at(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= low.at(i, k) * low.at(j, k);
      if (i == j) {
        if (sum <= 0.0 || !std::isfinite(sum)) {
          throw ParameterError("matrix is not positive-definite");
        }
        low.at(i, i) = std::sqrt(sum);
      } else {
        low.at(i, j) = sum / low.at(j, j);
      }
    }
  }
  return low;
}

Tensor spd_inverse(const Tensor& spd) {
  Tensor low = cholesky(spd);
  std::size_t n = spd.extent(0);
  // Invert L by forward substitution, then A^-1 = L^-T L^-1.
  Tensor linv({n, n});
  for (std::size_t col = 0; col < n; ++col) {
    linv.at(col, col) = 1.0 / low.at(col, col);
    for (std::size_t i = col + 1; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t k = col; k < i; ++k) sum += low.at(i, k) * linv.at(k, col);
      linv.at(i, col) = -sum / low.at(i, i);
    }
  }
  Tensor inv({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = 0.0;
      for (std::size_t k = i; k < n; ++k) sum += linv.at(k, i) * linv.at(k, j);
      inv.at(i, j) = sum;
      inv.at(j, i) = sum;
    }
  }
  return inv;
}

double spd_log_det(const Tensor& spd) {
  Tensor low = cholesky(spd);
  double sum = 0.0;
  for (std::size_t i = 0; i < spd.extent(0); ++i) {
    sum += std::log(low.at(i, i));
  }
  return 2.0 * sum;
}

Tensor spd_solve(const Tensor& spd, const Tensor& b) {
  Tensor low = cholesky(spd);
  std::size_t n = spd.extent(0);
  if (b.size() != n) throw DimensionError("spd_solve: size mismatch");
  Tensor y({n});
  for (std::size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (std::size_t k = 0; k < i; ++k) sum -= low.at(i, k) * y[k];
    y[i] = sum / low.at(i, i);
  }
  Tensor x({n});
  for (std::size_t i = n; i-- > 0;) {
    double sum = y[i];
    for (std::size_t k = i + 1; k < n; ++k) sum -= low.at(k, i) * x[k];
    x[i] = sum / low.at(i, i);
  }
  return x;
}

Tensor gauss_jordan_inverse(const Tensor& a) {
  require_square(a, "gauss_jordan_inverse");
  std::size_t n = a.extent(0);
  Tensor work = a;
  Tensor inv = Tensor::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(work.at(r, col)) > std::fabs(work.at(pivot, col))) pivot = r;
    }
    if (work.at(pivot, col) == 0.0) {
      throw ParameterError("matrix is singular");
    }
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(work.at(pivot, j), work.at(col, j));
        std::swap(inv.at(pivot, j), inv.at(col, j));
      }
    }
    double diag = work.at(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      work.at(col, j) /= diag;
      inv.at(col, j) /= diag;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double factor = work.at(r, col);
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        work.at(r, j) -= factor * work.at(col, j);
        inv.at(r, j) -= factor * inv.at(col, j);
      }
    }
  }
  return inv;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  if (a.rank() != 2 || a.extent(1) != x.size()) {
    throw DimensionError("matvec: shape mismatch");
  }
  Tensor out({a.extent(0)});
  for (std::size_t i = 0; i < a.extent(0); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.extent(1); ++j) sum += a.at(i, j) * x[j];
    out[i] = sum;
  }
  return out;
}

Tensor matmat(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0)) {
    throw DimensionError("matmat: shape mismatch");
  }
  Tensor out({a.extent(0), b.extent(1)});
  for (std::size_t i = 0; i < a.extent(0); ++i) {
    for (std::size_t k = 0; k < a.extent(1); ++k) {
      double av = a.at(i, k);
      for (std::size_t j = 0; j < b.extent(1); ++j) {
        out.at(i, j) += av * b.at(k, j);
      }
    }
  }
  return out;
}

void mean_and_covariance(const Tensor& rows, Tensor& mean, Tensor& cov) {
  if (rows.rank() != 2 || rows.extent(0) < 2) {
    throw DimensionError("mean_and_covariance: need at least two rows");
  }
  std::size_t n = rows.extent(0), d = rows.extent(1);
  mean = Tensor({d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += rows.at(i, j);
  }
  for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
  cov = Tensor({d, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      double da = rows.at(i, a) - mean[a];
      for (std::size_t b = a; b < d; ++b) {
        cov.at(a, b) += da * (rows.at(i, b) - mean[b]);
      }
    }
  }
  double denom = static_cast<double>(n - 1);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov.at(a, b) /= denom;
      cov.at(b, a) = cov.at(a, b);
    }
  }
}

}  // namespace flowinfer::linalg
