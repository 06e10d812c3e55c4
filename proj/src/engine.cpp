#include "flowinfer/engine.hpp"

#include <cstring>

namespace flowinfer {

std::vector<Parameter*> Engine::all_parameters() {
  std::vector<Parameter*> params;
  for (Parameter* p : summary->parameters()) params.push_back(p);
  for (Parameter* p : flow->parameters()) params.push_back(p);
  return params;
}

Engine build_engine(const RunConfig& raw) {
  Engine engine;
  engine.config = raw.resolved();
  const RunConfig& cfg = engine.config;

  engine.model = make_model(cfg.model, cfg.mvn_dim, cfg.mvn_cov,
                            cfg.gmm_center_radius, cfg.gmm_cluster_std,
                            cfg.ricker_dummy);
  engine.scaler = engine.model->theta_scaler();

  RngStream summary_init(cfg.seed, stream_id(StreamPurpose::kNetInit, 0));
  std::size_t data_dim = engine.model->data_dim();
  std::size_t summary_dim;
  if (cfg.summary_kind == "identity") {
    engine.summary = std::make_unique<IdentitySummary>(data_dim);
    summary_dim = data_dim;
  } else if (cfg.summary_kind == "invariant") {
    InvariantSummarySpec spec;
    spec.item_dim = data_dim;
    spec.equivariant_layers = cfg.invariant_equivariant_layers;
    spec.hidden_units = cfg.invariant_hidden_units;
    spec.head_hidden = cfg.summary_head_hidden;
    spec.output_dim = cfg.summary_dim;
    engine.summary = std::make_unique<InvariantSummary>(spec, summary_init);
    summary_dim = cfg.summary_dim;
  } else if (cfg.summary_kind == "temporal") {
    TemporalSummarySpec spec;
    spec.item_dim = data_dim;
    spec.channels = cfg.temporal_channels;
    spec.head_hidden = cfg.summary_head_hidden;
    spec.output_dim = cfg.summary_dim;
    spec.min_length = cfg.temporal_min_length;
    engine.summary = std::make_unique<TemporalSummary>(spec, summary_init);
    summary_dim = cfg.summary_dim;
  } else if (cfg.summary_kind == "handcrafted") {
    if (cfg.model != "lv" && cfg.model != "lv_handcrafted") {
      throw ConfigError("handcrafted summaries exist only for the lv model");
    }
    engine.summary = std::make_unique<FixedSummary>(
        data_dim, 9,
        [](const Tensor& dataset) { return lv_handcrafted_summary(dataset); });
    summary_dim = 9;
  } else {
    throw ConfigError("unknown summary_kind '" + cfg.summary_kind + "'");
  }

  FlowSpec flow_spec;
  flow_spec.dim = engine.model->param_dim();
  flow_spec.cond_dim = summary_dim;
  flow_spec.num_blocks = cfg.num_coupling_blocks;
  flow_spec.hidden_units = cfg.subnet_hidden_units;
  flow_spec.hidden_layers = cfg.subnet_hidden_layers;
  flow_spec.clamp = cfg.clamp;
  RngStream flow_init(cfg.seed, stream_id(StreamPurpose::kNetInit, 1));
  engine.flow = std::make_unique<ConditionalInn>(flow_spec, flow_init);
  return engine;
}

Checkpoint make_checkpoint(Engine& engine) {
  Checkpoint ckpt;
  ckpt.config_text = engine.config.canonical_text();
  ckpt.config_hash = engine.config.hash();
  for (const Permutation& p : engine.flow->permutations()) {
    ckpt.permutations.push_back(p.forward());
  }
  for (Parameter* p : engine.all_parameters()) {
    ckpt.tensor_names.push_back(p->name);
    ckpt.tensors.push_back(p->value);
  }
  return ckpt;
}

Engine engine_from_checkpoint(const Checkpoint& ckpt) {
  RunConfig cfg = RunConfig::parse(ckpt.config_text);
  Engine engine = build_engine(cfg);
  engine.flow->set_permutations(ckpt.permutations);
  std::vector<Parameter*> params = engine.all_parameters();
  if (params.size() != ckpt.tensors.size()) {
    throw IoError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                  " tensors, network expects " +
                  std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (ckpt.tensor_names[i] != params[i]->name) {
      throw IoError("checkpoint tensor '" + ckpt.tensor_names[i] +
                    "' does not match expected '" + params[i]->name + "'");
    }
    if (!params[i]->value.same_shape(ckpt.tensors[i])) {
      throw IoError("checkpoint tensor '" + ckpt.tensor_names[i] +
                    "' has shape " + shape_str(ckpt.tensors[i].shape()) +
                    ", config expects " +
                    shape_str(params[i]->value.shape()));
    }
    params[i]->value = ckpt.tensors[i];
  }
  return engine;
}

std::uint64_t parameters_hash(Engine& engine) {
  std::string bytes;
  for (Parameter* p : engine.all_parameters()) {
    bytes.append(reinterpret_cast<const char*>(p->value.data()),
                 p->value.size() * sizeof(double));
  }
  return fnv1a64(bytes);
}

}  // namespace flowinfer
