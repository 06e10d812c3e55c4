#pragma once

#include <cstddef>
#include <vector>

namespace flowinfer::stats {

// Linear-interpolation quantile of a sample (the values are copied and
// sorted; q in [0, 1]).
double quantile(std::vector<double> values, double q);

double mean(const std::vector<double>& values);
double median(std::vector<double> values);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Survival function of the chi-square distribution with `dof` degrees.
double chi_square_sf(double x, double dof);

// Pearson chi-square statistic of observed counts against a uniform
// expectation.
double chi_square_uniform_stat(const std::vector<std::size_t>& counts,
                               double total);

// Two-sided Kolmogorov-Smirnov test of a sample against U(0, 1); returns the
// asymptotic p-value with the small-sample correction.
double ks_uniform_pvalue(std::vector<double> sample);

}  // namespace flowinfer::stats
