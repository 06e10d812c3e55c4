#pragma once

#include "flowinfer/tensor.hpp"

namespace flowinfer::linalg {

// Lower Cholesky factor of a symmetric positive-definite matrix.
// Throws ParameterError if the matrix is not positive-definite.
Tensor cholesky(const Tensor& spd);

// Inverse of an SPD matrix via its Cholesky factor.
Tensor spd_inverse(const Tensor& spd);

// log(det) of an SPD matrix via its Cholesky factor.
double spd_log_det(const Tensor& spd);

// Solves spd * x = b for a vector b.
Tensor spd_solve(const Tensor& spd, const Tensor& b);

// General square inverse by Gauss-Jordan with partial pivoting (used as the
// independent route in metric cross-checks).
Tensor gauss_jordan_inverse(const Tensor& a);

Tensor matvec(const Tensor& a, const Tensor& x);
Tensor matmat(const Tensor& a, const Tensor& b);

// Sample mean [d] and covariance [d,d] (denominator n-1) of rows.
void mean_and_covariance(const Tensor& rows, Tensor& mean, Tensor& cov);

}  // namespace flowinfer::linalg
