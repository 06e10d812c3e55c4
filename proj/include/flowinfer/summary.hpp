#pragma once

#include <memory>
#include <vector>

#include "flowinfer/nets.hpp"

namespace flowinfer {

// Reduces a variable-size dataset to a fixed-size summary vector that
// conditions the flow. Input layouts by architecture:
//   identity / invariant: [batch, items, item_dim]
//   temporal:             [batch, channels, length]
// The output is always [batch, output_dim], whatever the item count.
class SummaryNet {
 public:
  virtual ~SummaryNet() = default;
  virtual std::size_t output_dim() const = 0;
  virtual std::size_t item_dim() const = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  // Binds parameters through `source` and returns the summary vector node.
  virtual Var apply(Tape& tape, VarSource& source,
                    const Tensor& batch) const = 0;

  // Convenience: summary values for one batch, no gradients kept.
  Tensor compute(const Tensor& batch) const;
};

// Passes a single observation through unchanged (datasets of exactly one
// item, entered directly into the flow).
class IdentitySummary final : public SummaryNet {
 public:
  explicit IdentitySummary(std::size_t item_dim) : item_dim_(item_dim) {}
  std::size_t output_dim() const override { return item_dim_; }
  std::size_t item_dim() const override { return item_dim_; }
  std::vector<Parameter*> parameters() override { return {}; }
  Var apply(Tape& tape, VarSource& source, const Tensor& batch) const override;

 private:
  std::size_t item_dim_;
};

struct InvariantSummarySpec {
  std::size_t item_dim = 1;
  std::size_t equivariant_layers = 2;
  std::size_t hidden_units = 64;
  std::size_t head_hidden = 64;
  std::size_t output_dim = 128;
};

// Permutation-invariant reducer for exchangeable datasets: stacked
// equivariant layers (row-wise dense over the row and the mean-pooled
// context), then a sum pool and a dense head. Sum pooling lets the summary
// encode the item count, which posterior contraction needs.
class InvariantSummary final : public SummaryNet {
 public:
  InvariantSummary(const InvariantSummarySpec& spec, RngStream& init);
  std::size_t output_dim() const override { return spec_.output_dim; }
  std::size_t item_dim() const override { return spec_.item_dim; }
  std::vector<Parameter*> parameters() override;
  Var apply(Tape& tape, VarSource& source, const Tensor& batch) const override;

 private:
  struct EquivariantLayer {
    Parameter row_weight;   // [f_in, f_out]
    Parameter ctx_weight;   // [f_in, f_out], applied to the pooled context
    Parameter bias;         // [f_out]
  };
  InvariantSummarySpec spec_;
  std::vector<EquivariantLayer> layers_;
  Mlp head_;
};

struct TemporalSummarySpec {
  std::size_t item_dim = 1;  // input channels
  std::vector<std::size_t> channels = {32, 64, 64};
  std::size_t kernel = 3;
  std::size_t stride = 2;
  std::size_t head_hidden = 64;
  std::size_t output_dim = 128;
  std::size_t min_length = 16;
};

// Time-series reducer: strided 1-D convolution stack with ELU, global mean
// pool over time, dense head.
class TemporalSummary final : public SummaryNet {
 public:
  TemporalSummary(const TemporalSummarySpec& spec, RngStream& init);
  std::size_t output_dim() const override { return spec_.output_dim; }
  std::size_t item_dim() const override { return spec_.item_dim; }
  std::size_t min_length() const { return spec_.min_length; }
  std::vector<Parameter*> parameters() override;
  Var apply(Tape& tape, VarSource& source, const Tensor& batch) const override;
  Mlp& head() { return head_; }

 private:
  TemporalSummarySpec spec_;
  std::vector<Parameter> kernels_;  // [c_out, c_in, k]
  std::vector<Parameter> biases_;   // [1, c_out, 1]
  Mlp head_;
};

// Fixed (non-trainable) summary: applies `fn` to every dataset in the batch.
// Used for the hand-crafted statistics baseline.
class FixedSummary final : public SummaryNet {
 public:
  using Fn = std::function<Tensor(const Tensor& dataset)>;
  FixedSummary(std::size_t item_dim, std::size_t output_dim, Fn fn)
      : item_dim_(item_dim), output_dim_(output_dim), fn_(std::move(fn)) {}
  std::size_t output_dim() const override { return output_dim_; }
  std::size_t item_dim() const override { return item_dim_; }
  std::vector<Parameter*> parameters() override { return {}; }
  Var apply(Tape& tape, VarSource& source, const Tensor& batch) const override;

 private:
  std::size_t item_dim_;
  std::size_t output_dim_;
  Fn fn_;
};

}  // namespace flowinfer
