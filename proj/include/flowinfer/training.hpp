#pragma once

#include <functional>
#include <vector>

#include "flowinfer/flow.hpp"
#include "flowinfer/simulators.hpp"
#include "flowinfer/summary.hpp"

namespace flowinfer {

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::size_t iterations_per_epoch = 1000;
  std::size_t n_min = 1;  // observations (or time steps) per dataset
  std::size_t n_max = 1;
  double learning_rate = 1e-3;
  double lr_decay = 0.95;  // multiplied in once per epoch
  double grad_clip = 10.0;
  std::uint64_t seed = 1;

  void validate() const;
};

// Adam with the conventional beta/eps constants; moments mirror the
// parameter shapes and the step counter never resets.
class AdamState {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit AdamState(const std::vector<Parameter*>& params);
  void step(const std::vector<Parameter*>& params,
            const std::vector<Tensor>& grads, double lr);
  std::uint64_t step_count() const { return step_count_; }

 private:
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
  std::uint64_t step_count_ = 0;
};

// Monte Carlo loss of one batch: mean over datasets of
// |f(theta; summary)|^2 / 2 - logdet. theta_batch rows are already in the
// space the flow sees.
Var batch_loss_var(Tape& tape, VarSource& source, const Tensor& theta_batch,
                   const Tensor& data_batch, const SummaryNet& summary,
                   const ConditionalInn& flow);
double batch_loss(const Tensor& theta_batch, const Tensor& data_batch,
                  const SummaryNet& summary, const ConditionalInn& flow);

struct TraceRow {
  std::size_t iteration = 0;  // 1-based, global
  std::size_t epoch = 0;      // 1-based
  std::size_t dataset_size = 0;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;  // global L2 norm before clipping
};

struct SimulatedBatch {
  Tensor theta;  // [M, D] raw parameter draws
  Tensor data;   // layout per summary architecture
  std::size_t dataset_size = 0;
};

// Draws the batch for one iteration: one dataset size shared by the whole
// batch, fresh prior draws and simulations, rejected draws resampled in
// place. Streams derive from (seed, iteration, member), so the result is
// identical across thread counts.
SimulatedBatch simulate_batch(const SimulatorModel& model,
                              const SummaryNet& summary,
                              const TrainConfig& config,
                              std::size_t iteration);

struct TrainResult {
  std::vector<TraceRow> trace;
};

// Algorithm: per iteration draw a fresh batch from the simulator, take one
// Adam step on the joint summary+flow loss; the learning rate decays by
// lr_decay after each epoch. Simulation of the next batch overlaps the
// optimizer step of the current one.
TrainResult train_online(
    const SimulatorModel& model, SummaryNet& summary, ConditionalInn& flow,
    const ThetaScaler& scaler, const TrainConfig& config,
    const std::function<void(std::size_t epoch)>& on_epoch_end = {},
    const std::function<void(const TraceRow&)>& on_iteration = {});

}  // namespace flowinfer
