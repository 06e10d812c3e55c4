#pragma once

#include <memory>

#include "flowinfer/checkpoint.hpp"
#include "flowinfer/config.hpp"
#include "flowinfer/flow.hpp"
#include "flowinfer/simulators.hpp"
#include "flowinfer/summary.hpp"

namespace flowinfer {

// A fully wired run: simulator, summary network, flow, and the fixed
// parameter standardization, all built deterministically from one config.
struct Engine {
  RunConfig config;  // resolved
  std::unique_ptr<SimulatorModel> model;
  std::unique_ptr<SummaryNet> summary;
  std::unique_ptr<ConditionalInn> flow;
  ThetaScaler scaler;

  std::vector<Parameter*> all_parameters();
};

Engine build_engine(const RunConfig& config);

Checkpoint make_checkpoint(Engine& engine);
// Restores the tensors of `ckpt` into a freshly built engine; shapes are
// validated against the config carried by the checkpoint.
Engine engine_from_checkpoint(const Checkpoint& ckpt);

// FNV-1a hash over all parameter bytes (for no-mutation checks).
std::uint64_t parameters_hash(Engine& engine);

}  // namespace flowinfer
