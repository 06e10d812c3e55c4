#include "flowinfer/inference.hpp"

#include <cmath>

#include "flowinfer/kernels.hpp"

namespace flowinfer {

Tensor dataset_to_batch(const Tensor& dataset, const SummaryNet& summary,
                        const SimulatorModel& model) {
  if (dataset.rank() != 2 || dataset.extent(1) != model.data_dim()) {
    throw ContractError("dataset must be [items, " +
                        std::to_string(model.data_dim()) + "], got " +
                        shape_str(dataset.shape()));
  }
  Tensor transformed = dataset;
  model.transform_data(transformed);
  std::size_t items = dataset.extent(0);
  std::size_t dim = dataset.extent(1);
  bool channels_first = model.kind() == DatasetKind::kTimeSeries &&
                        dynamic_cast<const FixedSummary*>(&summary) == nullptr;
  if (!channels_first) {
    return transformed.reshaped({1, items, dim});
  }
  Tensor batch({1, dim, items});
  for (std::size_t t = 0; t < items; ++t) {
    for (std::size_t c = 0; c < dim; ++c) {
      batch.at(0, c, t) = transformed.at(t, c);
    }
  }
  return batch;
}

PosteriorSample sample_posterior(const Tensor& x_obs, std::size_t draws,
                                 const SummaryNet& summary,
                                 const ConditionalInn& flow,
                                 const SimulatorModel& model,
                                 RngStream& stream) {
  if (draws < 1) throw ContractError("need at least one posterior draw");
  Tensor batch = dataset_to_batch(x_obs, summary, model);
  Tensor cond_row = summary.compute(batch);  // [1, S]

  Tensor latent = sample_gaussian(stream, {draws, flow.spec().dim});
  Tensor cond = tile_rows(cond_row, draws);
  Tensor scaled = flow.inverse(latent, cond);
  ThetaScaler scaler = model.theta_scaler();

  PosteriorSample out;
  out.draws = scaler.from_latent(scaled);
  out.summary_used = cond_row.reshaped({cond_row.size()});
  out.seed = stream.seed();
  return out;
}

std::vector<PosteriorSample> sample_posterior_batch(
    const std::vector<Tensor>& datasets, std::size_t draws,
    const SummaryNet& summary, const ConditionalInn& flow,
    const SimulatorModel& model, std::uint64_t run_seed,
    std::vector<std::string>* errors) {
  std::vector<PosteriorSample> out(datasets.size());
  std::vector<std::string> failures(datasets.size());
  // Read-only over the networks; per-dataset streams make the result
  // independent of processing order.
  kernels::parallel_for(datasets.size(), 1, [&](std::size_t lo,
                                                std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      RngStream stream(run_seed, stream_id(StreamPurpose::kInference, i));
      try {
        out[i] = sample_posterior(datasets[i], draws, summary, flow, model,
                                  stream);
        out[i].dataset_id = std::to_string(i);
      } catch (const std::exception& err) {
        failures[i] = err.what();
      }
    }
  });
  if (!errors) {
    for (const std::string& f : failures) {
      if (!f.empty()) throw ContractError("dataset failed: " + f);
    }
  } else {
    *errors = std::move(failures);
  }
  return out;
}

double evaluate_log_posterior(const Tensor& theta, const Tensor& x_obs,
                              const SummaryNet& summary,
                              const ConditionalInn& flow,
                              const SimulatorModel& model) {
  if (theta.size() != model.param_dim()) {
    throw ContractError("theta must have " +
                        std::to_string(model.param_dim()) + " components");
  }
  Tensor batch = dataset_to_batch(x_obs, summary, model);
  Tensor cond = summary.compute(batch);  // [1, S]
  ThetaScaler scaler = model.theta_scaler();
  Tensor scaled = scaler.to_latent(theta.reshaped({1, theta.size()}));
  Tensor density = flow.log_density(scaled, cond);
  return density[0] + scaler.log_jacobian();
}

}  // namespace flowinfer
