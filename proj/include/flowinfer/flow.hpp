#pragma once

#include <utility>
#include <vector>

#include "flowinfer/nets.hpp"

namespace flowinfer {

// Fixed (never trained) index permutation applied to the parameter vector
// before each coupling block.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> forward);
  static Permutation random(std::size_t dim, RngStream& stream);

  const std::vector<std::size_t>& forward() const { return fwd_; }
  const std::vector<std::size_t>& inverse() const { return inv_; }
  std::size_t dim() const { return fwd_.size(); }

 private:
  std::vector<std::size_t> fwd_;
  std::vector<std::size_t> inv_;
};

struct FlowSpec {
  std::size_t dim = 2;          // D, the parameter dimension
  std::size_t cond_dim = 1;     // S, the summary dimension
  std::size_t num_blocks = 5;
  std::size_t hidden_units = 64;
  std::size_t hidden_layers = 2;
  double clamp = 1.9;
};

// One affine coupling step. Four conditioned subnetworks transform half the
// input with scale/shift computed from the other half; scale outputs are
// soft-clamped to (-clamp, clamp) before exponentiation so training cannot
// blow up the Jacobian.
class CouplingBlock {
 public:
  CouplingBlock() = default;
  CouplingBlock(const std::string& name, std::size_t dim, std::size_t cond_dim,
                std::size_t hidden_units, std::size_t hidden_layers,
                double clamp, RngStream& init);

  std::size_t dim() const { return dim_; }
  std::size_t split() const { return first_size_; }
  double clamp() const { return clamp_; }
  std::vector<Parameter*> parameters();

  struct Bound {
    const CouplingBlock* block = nullptr;
    Mlp::Bound scale_first, shift_first, scale_second, shift_second;
    // u,cond: [rows, D], [rows, S] -> (v [rows, D], logdet [rows])
    std::pair<Var, Var> forward(Tape& tape, Var u, Var cond) const;
    Var inverse(Tape& tape, Var v, Var cond) const;
  };
  Bound bind(Tape& tape, VarSource& source) const;

 private:
  std::size_t dim_ = 0;
  std::size_t first_size_ = 0;  // floor(D/2); second half gets the rest
  double clamp_ = 1.9;
  Mlp scale_first_, shift_first_, scale_second_, shift_second_;
};

// Chain of coupling blocks, each preceded by a fixed permutation. Maps the
// parameter vector to a latent vector of the same dimension; the composition
// is bijective for any conditioning vector, which is what makes the density
// below exact.
class ConditionalInn {
 public:
  ConditionalInn() = default;
  ConditionalInn(const FlowSpec& spec, RngStream& init);

  const FlowSpec& spec() const { return spec_; }
  std::vector<Parameter*> parameters();
  const std::vector<Permutation>& permutations() const { return perms_; }
  void set_permutations(const std::vector<std::vector<std::size_t>>& perms);

  struct Bound {
    const ConditionalInn* net = nullptr;
    std::vector<CouplingBlock::Bound> blocks;
    std::pair<Var, Var> forward(Tape& tape, Var theta, Var cond) const;
    Var inverse(Tape& tape, Var latent, Var cond) const;
    // log p(theta | cond) = -D/2 log(2 pi) - |f(theta;cond)|^2 / 2 + logdet
    Var log_density(Tape& tape, Var theta, Var cond) const;
  };
  Bound bind(Tape& tape, VarSource& source) const;

  // Plain-tensor conveniences; each builds a throwaway tape.
  std::pair<Tensor, Tensor> forward(const Tensor& theta,
                                    const Tensor& cond) const;
  Tensor inverse(const Tensor& latent, const Tensor& cond) const;
  Tensor log_density(const Tensor& theta, const Tensor& cond) const;

 private:
  FlowSpec spec_;
  std::vector<Permutation> perms_;
  std::vector<CouplingBlock> blocks_;
};

// Rows of `cond` repeated to match `rows` when cond has a single row.
Tensor tile_rows(const Tensor& row, std::size_t rows);

}  // namespace flowinfer
