#pragma once

#include <string>
#include <vector>

#include "flowinfer/flow.hpp"
#include "flowinfer/simulators.hpp"
#include "flowinfer/summary.hpp"

namespace flowinfer {

// L posterior draws for one observed dataset, with enough provenance to
// reproduce them.
struct PosteriorSample {
  std::string dataset_id;
  Tensor draws;         // [L, D], parameter space
  Tensor summary_used;  // [S]
  std::string checkpoint_id;
  std::uint64_t seed = 0;
};

// Amortized sampling: the summary is computed once, L latent draws are
// inverted through the flow, nothing is trained or mutated.
PosteriorSample sample_posterior(const Tensor& x_obs, std::size_t draws,
                                 const SummaryNet& summary,
                                 const ConditionalInn& flow,
                                 const SimulatorModel& model,
                                 RngStream& stream);

// One stream per dataset derived from (run_seed, dataset index), so results
// are identical whatever the processing order or thread count. Per-dataset
// failures are collected into `errors` (aligned with the input order, empty
// string on success) instead of aborting the batch.
std::vector<PosteriorSample> sample_posterior_batch(
    const std::vector<Tensor>& datasets, std::size_t draws,
    const SummaryNet& summary, const ConditionalInn& flow,
    const SimulatorModel& model, std::uint64_t run_seed,
    std::vector<std::string>* errors = nullptr);

// log p(theta | x_obs) from the change of variables through the flow,
// including the constant Jacobian of the parameter standardization.
double evaluate_log_posterior(const Tensor& theta, const Tensor& x_obs,
                              const SummaryNet& summary,
                              const ConditionalInn& flow,
                              const SimulatorModel& model);

// Lays out one raw dataset ([N or T, data_dim]) as the [1, ...] batch the
// summary network expects, applying the model's fixed data transform.
Tensor dataset_to_batch(const Tensor& dataset, const SummaryNet& summary,
                        const SimulatorModel& model);

}  // namespace flowinfer
