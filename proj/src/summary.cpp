#include "flowinfer/summary.hpp"

#include <array>

namespace flowinfer {

Tensor SummaryNet::compute(const Tensor& batch) const {
  Tape tape;
  VarSource source = VarSource::leaves(tape);
  Var out = apply(tape, source, const_cast<const Tensor&>(batch));
  return tape.value(out);
}

Var IdentitySummary::apply(Tape& tape, VarSource& source,
                           const Tensor& batch) const {
  (void)source;
  if (batch.rank() != 3 || batch.extent(2) != item_dim_) {
    throw ContractError("identity summary expects [batch, 1, " +
                        std::to_string(item_dim_) + "], got " +
                        shape_str(batch.shape()));
  }
  if (batch.extent(1) != 1) {
    throw ContractError("identity summary requires exactly one observation, "
                        "got " + std::to_string(batch.extent(1)));
  }
  Var x = tape.leaf(batch);
  return tape.reshape(x, {batch.extent(0), item_dim_});
}

InvariantSummary::InvariantSummary(const InvariantSummarySpec& spec,
                                   RngStream& init)
    : spec_(spec) {
  std::size_t f_in = spec.item_dim;
  for (std::size_t e = 0; e < spec.equivariant_layers; ++e) {
    std::size_t f_out = spec.hidden_units;
    std::string base = "summary.equivariant" + std::to_string(e);
    EquivariantLayer layer;
    layer.row_weight = {base + ".W_row",
                        glorot_uniform({f_in, f_out}, f_in, f_out, init)};
    layer.ctx_weight = {base + ".W_ctx",
                        glorot_uniform({f_in, f_out}, f_in, f_out, init)};
    layer.bias = {base + ".b", Tensor({f_out})};
    layers_.push_back(std::move(layer));
    f_in = f_out;
  }
  head_ = Mlp("summary.head", f_in, {spec.head_hidden}, spec.output_dim, init,
              FinalInit::kGlorot);
}

std::vector<Parameter*> InvariantSummary::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.row_weight);
    out.push_back(&layer.ctx_weight);
    out.push_back(&layer.bias);
  }
  for (Parameter* p : head_.parameters()) out.push_back(p);
  return out;
}

Var InvariantSummary::apply(Tape& tape, VarSource& source,
                            const Tensor& batch) const {
  if (batch.rank() != 3 || batch.extent(2) != spec_.item_dim) {
    throw ContractError("invariant summary expects [batch, items, " +
                        std::to_string(spec_.item_dim) + "], got " +
                        shape_str(batch.shape()));
  }
  if (batch.extent(1) == 0) {
    throw ContractError("invariant summary received an empty dataset");
  }
  std::size_t rows = batch.extent(0);
  std::size_t items = batch.extent(1);

  std::vector<std::array<Var, 3>> bound;
  for (const auto& layer : layers_) {
    Var row_weight = source.next(layer.row_weight.value);
    Var ctx_weight = source.next(layer.ctx_weight.value);
    Var bias = source.next(layer.bias.value);
    bound.push_back({row_weight, ctx_weight, bias});
  }
  Mlp::Bound head = head_.bind(tape, source);

  Var x = tape.leaf(batch);
  std::size_t f_in = spec_.item_dim;
  for (std::size_t e = 0; e < layers_.size(); ++e) {
    std::size_t f_out = spec_.hidden_units;
    Var flat = tape.reshape(x, {rows * items, f_in});
    Var row_feat = tape.reshape(tape.matmul(flat, bound[e][0]),
                                {rows, items, f_out});
    // Mean-pooled context so duplicating every item leaves the per-item
    // features unchanged; the count lives in the final sum pool instead.
    Var ctx = tape.mean_over_axis(x, 1);
    Var ctx_feat = tape.reshape(tape.matmul(ctx, bound[e][1]),
                                {rows, 1, f_out});
    x = tape.elu(tape.add(tape.add(row_feat, ctx_feat), bound[e][2]));
    f_in = f_out;
  }
  Var pooled = tape.sum_over_axis(x, 1);
  return head(tape, pooled);
}

TemporalSummary::TemporalSummary(const TemporalSummarySpec& spec,
                                 RngStream& init)
    : spec_(spec) {
  if (spec.channels.empty()) {
    throw ConfigError("temporal summary needs at least one conv layer");
  }
  std::size_t c_in = spec.item_dim;
  for (std::size_t l = 0; l < spec.channels.size(); ++l) {
    std::size_t c_out = spec.channels[l];
    std::string base = "summary.conv" + std::to_string(l);
    kernels_.push_back(
        {base + ".K", glorot_uniform({c_out, c_in, spec.kernel},
                                     c_in * spec.kernel, c_out * spec.kernel,
                                     init)});
    biases_.push_back({base + ".b", Tensor({1, c_out, 1})});
    c_in = c_out;
  }
  head_ = Mlp("summary.head", c_in, {spec.head_hidden}, spec.output_dim, init,
              FinalInit::kGlorot);
}

std::vector<Parameter*> TemporalSummary::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    out.push_back(&kernels_[l]);
    out.push_back(&biases_[l]);
  }
  for (Parameter* p : head_.parameters()) out.push_back(p);
  return out;
}

Var TemporalSummary::apply(Tape& tape, VarSource& source,
                           const Tensor& batch) const {
  if (batch.rank() != 3 || batch.extent(1) != spec_.item_dim) {
    throw ContractError("temporal summary expects [batch, " +
                        std::to_string(spec_.item_dim) + ", length], got " +
                        shape_str(batch.shape()));
  }
  std::size_t length = batch.extent(2);
  if (length < spec_.min_length) {
    throw ContractError("series length " + std::to_string(length) +
                        " below the minimum " +
                        std::to_string(spec_.min_length));
  }
  std::size_t remaining = length;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    if (remaining < spec_.kernel) {
      throw ContractError("series too short for conv stack at layer " +
                          std::to_string(l));
    }
    remaining = (remaining - spec_.kernel) / spec_.stride + 1;
  }

  // Bind in parameters() order with one statement per draw (argument
  // evaluation order is unspecified).
  std::vector<std::pair<Var, Var>> bound;
  for (std::size_t l = 0; l < kernels_.size(); ++l) {
    Var kernel = source.next(kernels_[l].value);
    Var bias = source.next(biases_[l].value);
    bound.emplace_back(kernel, bias);
  }
  Mlp::Bound head = head_.bind(tape, source);

  Var x = tape.leaf(batch);
  for (auto& [kernel, bias] : bound) {
    x = tape.elu(tape.add(tape.conv1d(x, kernel, spec_.stride), bias));
  }
  Var pooled = tape.mean_over_axis(x, 2);
  return head(tape, pooled);
}

Var FixedSummary::apply(Tape& tape, VarSource& source,
                        const Tensor& batch) const {
  (void)source;
  if (batch.rank() != 3 || batch.extent(2) != item_dim_) {
    throw ContractError("fixed summary expects [batch, items, " +
                        std::to_string(item_dim_) + "], got " +
                        shape_str(batch.shape()));
  }
  std::size_t rows = batch.extent(0);
  std::size_t items = batch.extent(1);
  Tensor out({rows, output_dim_});
  for (std::size_t m = 0; m < rows; ++m) {
    Tensor dataset({items, item_dim_});
    for (std::size_t i = 0; i < items * item_dim_; ++i) {
      dataset[i] = batch[m * items * item_dim_ + i];
    }
    Tensor stats = fn_(dataset);
    if (stats.size() != output_dim_) {
      throw ContractError("fixed summary produced " +
                          std::to_string(stats.size()) + " values, expected " +
                          std::to_string(output_dim_));
    }
    for (std::size_t j = 0; j < output_dim_; ++j) out.at(m, j) = stats[j];
  }
  return tape.leaf(std::move(out));
}

}  // namespace flowinfer
