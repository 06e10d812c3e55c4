#include "flowinfer/training.hpp"

#include <cmath>
#include <future>
#include <limits>

#include "flowinfer/kernels.hpp"

namespace flowinfer {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (n_min > n_max) throw ConfigError("n_min must not exceed n_max");
  if (n_min < 1) throw ConfigError("n_min must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw ConfigError("lr_decay must lie in (0, 1]");
  }
}

AdamState::AdamState(const std::vector<Parameter*>& params) {
  first_moment_.reserve(params.size());
  second_moment_.reserve(params.size());
  for (const Parameter* p : params) {
    first_moment_.emplace_back(p->value.shape());
    second_moment_.emplace_back(p->value.shape());
  }
}

void AdamState::step(const std::vector<Parameter*>& params,
                     const std::vector<Tensor>& grads, double lr) {
  if (params.size() != first_moment_.size() || grads.size() != params.size()) {
    throw DimensionError("adam: parameter/gradient count mismatch");
  }
  ++step_count_;
  double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count_));
  double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& value = params[i]->value;
    const Tensor& grad = grads[i];
    if (!value.same_shape(grad)) {
      throw DimensionError("adam: gradient shape mismatch for " +
                           params[i]->name);
    }
    Tensor& m = first_moment_[i];
    Tensor& v = second_moment_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * grad[j];
      v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * grad[j] * grad[j];
      double m_hat = m[j] / correction1;
      double v_hat = v[j] / correction2;
      value[j] -= lr * m_hat / (std::sqrt(v_hat) + kEps);
    }
  }
}

Var batch_loss_var(Tape& tape, VarSource& source, const Tensor& theta_batch,
                   const Tensor& data_batch, const SummaryNet& summary,
                   const ConditionalInn& flow) {
  Var cond = summary.apply(tape, source, data_batch);
  ConditionalInn::Bound bound = flow.bind(tape, source);
  auto [latent, logdet] = bound.forward(tape, tape.leaf(theta_batch), cond);
  Var half_norm =
      tape.scale(tape.sum_over_axis(tape.multiply(latent, latent), 1), 0.5);
  Var per_dataset = tape.add(half_norm, tape.scale(logdet, -1.0));
  return tape.mean_over_axis(per_dataset, 0);
}

double batch_loss(const Tensor& theta_batch, const Tensor& data_batch,
                  const SummaryNet& summary, const ConditionalInn& flow) {
  Tape tape;
  VarSource source = VarSource::leaves(tape);
  Var loss =
      batch_loss_var(tape, source, theta_batch, data_batch, summary, flow);
  return tape.value(loss)[0];
}

SimulatedBatch simulate_batch(const SimulatorModel& model,
                              const SummaryNet& summary,
                              const TrainConfig& config,
                              std::size_t iteration) {
  constexpr std::size_t kMaxRejections = 10000;
  SimulatedBatch batch;
  {
    RngStream size_stream(config.seed,
                          stream_id(StreamPurpose::kBatchSize, iteration));
    batch.dataset_size = static_cast<std::size_t>(size_stream.uniform_int(
        static_cast<std::int64_t>(config.n_min),
        static_cast<std::int64_t>(config.n_max)));
  }
  std::size_t members = config.batch_size;
  std::size_t dim = model.param_dim();
  std::size_t size = batch.dataset_size;
  std::size_t item_dim = model.data_dim();
  // Time series feed the convolutional summary channels-first; everything
  // else keeps one row per observation.
  bool channels_first = model.kind() == DatasetKind::kTimeSeries &&
                        dynamic_cast<const FixedSummary*>(&summary) == nullptr;
  batch.theta = Tensor({members, dim});
  batch.data = channels_first ? Tensor({members, item_dim, size})
                              : Tensor({members, size, item_dim});

  kernels::parallel_for(members, 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t m = lo; m < hi; ++m) {
      RngStream prior(config.seed,
                      stream_id(StreamPurpose::kPriorDraw, iteration, m));
      RngStream noise(config.seed,
                      stream_id(StreamPurpose::kSimNoise, iteration, m));
      Tensor theta, dataset;
      bool accepted = false;
      for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
        theta = model.sample_prior(prior);
        try {
          dataset = model.simulate(theta, size, noise);
          accepted = true;
          break;
        } catch (const SimulationRejected&) {
          continue;  // redraw theta within the iteration
        }
      }
      if (!accepted) {
        throw NumericError("simulator rejected " +
                           std::to_string(kMaxRejections) +
                           " consecutive draws");
      }
      model.transform_data(dataset);
      for (std::size_t j = 0; j < dim; ++j) batch.theta.at(m, j) = theta[j];
      if (channels_first) {
        for (std::size_t t = 0; t < size; ++t) {
          for (std::size_t c = 0; c < item_dim; ++c) {
            batch.data.at(m, c, t) = dataset.at(t, c);
          }
        }
      } else {
        for (std::size_t t = 0; t < size; ++t) {
          for (std::size_t c = 0; c < item_dim; ++c) {
            batch.data.at(m, t, c) = dataset.at(t, c);
          }
        }
      }
    }
  });
  return batch;
}

TrainResult train_online(
    const SimulatorModel& model, SummaryNet& summary, ConditionalInn& flow,
    const ThetaScaler& scaler, const TrainConfig& config,
    const std::function<void(std::size_t epoch)>& on_epoch_end,
    const std::function<void(const TraceRow&)>& on_iteration) {
  config.validate();
  TrainResult result;

  std::vector<Parameter*> params;
  for (Parameter* p : summary.parameters()) params.push_back(p);
  for (Parameter* p : flow.parameters()) params.push_back(p);
  AdamState adam(params);

  std::size_t total = config.epochs * config.iterations_per_epoch;
  result.trace.reserve(total);
  double lr = config.learning_rate;
  std::size_t consecutive_failures = 0;

  // One-step pipeline: batch k+1 simulates while the optimizer consumes
  // batch k. Stream derivation keeps the result independent of timing.
  std::future<SimulatedBatch> pending;
  auto launch = [&](std::size_t iteration) {
    return std::async(std::launch::async,
                      [&model, &summary, &config, iteration]() {
                        return simulate_batch(model, summary, config, iteration);
                      });
  };
  if (total > 0) pending = launch(0);

  for (std::size_t it = 0; it < total; ++it) {
    std::size_t epoch = it / config.iterations_per_epoch;
    SimulatedBatch batch = pending.get();
    if (it + 1 < total) pending = launch(it + 1);

    try {
      Tape tape;
      VarSource source = VarSource::leaves(tape);
      Tensor theta_scaled = scaler.to_latent(batch.theta);
      Var loss = batch_loss_var(tape, source, theta_scaled, batch.data,
                                summary, flow);
      tape.backward(loss);

      const auto& taken = source.taken();
      if (taken.size() != params.size()) {
        throw DimensionError("training bound a different parameter count");
      }
      std::vector<Tensor> grads;
      grads.reserve(params.size());
      double sq_norm = 0.0;
      for (std::size_t i = 0; i < params.size(); ++i) {
        grads.push_back(tape.grad(taken[i]));
        for (std::size_t j = 0; j < grads.back().size(); ++j) {
          sq_norm += grads.back()[j] * grads.back()[j];
        }
      }
      double grad_norm = std::sqrt(sq_norm);
      if (config.grad_clip > 0.0 && grad_norm > config.grad_clip) {
        double shrink = config.grad_clip / grad_norm;
        for (Tensor& g : grads) {
          for (std::size_t j = 0; j < g.size(); ++j) g[j] *= shrink;
        }
      }
      adam.step(params, grads, lr);

      TraceRow row{it + 1, epoch + 1, batch.dataset_size, tape.value(loss)[0],
                   lr, grad_norm};
      result.trace.push_back(row);
      if (on_iteration) on_iteration(row);
      consecutive_failures = 0;
    } catch (const NumericError& err) {
      if (++consecutive_failures >= 3) {
        throw NumericError(std::string(err.what()) + " (iteration " +
                           std::to_string(it + 1) + ", repeated " +
                           std::to_string(consecutive_failures) + " times)");
      }
      TraceRow row{it + 1, epoch + 1, batch.dataset_size,
                   std::numeric_limits<double>::quiet_NaN(), lr, 0.0};
      result.trace.push_back(row);
      if (on_iteration) on_iteration(row);
    }

    if ((it + 1) % config.iterations_per_epoch == 0) {
      lr *= config.lr_decay;
      if (on_epoch_end) on_epoch_end(epoch + 1);
    }
  }
  return result;
}

}  // namespace flowinfer
