#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowinfer/rng.hpp"
#include "flowinfer/simulators.hpp"
#include "flowinfer/tensor.hpp"

namespace flowinfer {

// Point-estimate recovery. Both follow the printed formulas: the NRMSE sums
// squared errors divided by the true-value range inside the square root, and
// R^2 is one minus the residual sum over the centered sum.
double nrmse(const std::vector<double>& truth, const std::vector<double>& est);
double r_squared(const std::vector<double>& truth,
                 const std::vector<double>& est);

struct CalibrationResult {
  std::vector<double> per_parameter;  // median |alpha_hat - alpha|
  bool low_sample_warning = false;    // fewer than 50 validation datasets
};

// Coverage of equal-tailed credible intervals at 100 levels alpha in (0,1).
// draws: one [L, D] tensor per dataset; truths: [M, D].
CalibrationResult calibration_error(const std::vector<Tensor>& draws,
                                    const Tensor& truths);

// Posterior sampler under test: dataset -> [L, D] draws.
using PosteriorFn =
    std::function<Tensor(const Tensor& dataset, std::size_t draws,
                         RngStream& stream)>;

struct SbcResult {
  std::size_t rounds = 0;
  std::size_t draws = 0;
  std::vector<std::vector<std::size_t>> ranks;       // [param][round]
  std::vector<std::vector<std::size_t>> histograms;  // [param][bin]
  std::vector<double> chi_square;                    // per parameter
  std::vector<double> p_value;                       // per parameter
};

// Simulation-based calibration: per round draw theta from the prior,
// simulate a dataset, sample the posterior, and rank the true value among
// the draws; exact samplers produce uniform ranks.
SbcResult sbc(const SimulatorModel& model, const PosteriorFn& sampler,
              std::size_t rounds, std::size_t draws, std::size_t dataset_size,
              std::size_t bins, std::uint64_t seed);

// Maximum mean discrepancy between two samples ([n, d] each): square root of
// the biased V-statistic with a Gaussian kernel whose bandwidth is the median
// pairwise distance over the pooled samples.
double mmd(const Tensor& sample_a, const Tensor& sample_b);

// Median MMD between observed datasets and data re-simulated at the
// posterior mean (posterior predictive mismatch).
double resim_error(const SimulatorModel& model,
                   const std::vector<Tensor>& observed,
                   const std::vector<Tensor>& posterior_means,
                   std::uint64_t seed);

// Closed-form Gaussian KL divergences.
double kl_gaussian_full(const Tensor& mean_p, const Tensor& cov_p,
                        const Tensor& mean_q, const Tensor& cov_q);
double kl_gaussian_diag(const Tensor& mean_p, const Tensor& std_p,
                        const Tensor& mean_q, const Tensor& std_q);

struct MvnKlResult {
  double mean_kl = 0.0;
  std::size_t ridge_flagged = 0;  // datasets needing a covariance ridge
};

// KL(truth || Gaussian fitted to draws) averaged over test sets. draws_fn
// maps an observation to [L, D] posterior draws.
MvnKlResult mvn_kl_validation(
    const MvnModel& model,
    const std::function<Tensor(const Tensor& observation)>& draws_fn,
    const std::vector<Tensor>& observations);

// Bootstrap standard error (1000 resamples) of a statistic of paired
// (truth, estimate) vectors.
double bootstrap_stderr(
    const std::function<double(const std::vector<double>&,
                               const std::vector<double>&)>& statistic,
    const std::vector<double>& truth, const std::vector<double>& est,
    std::size_t resamples, RngStream& stream);

}  // namespace flowinfer
