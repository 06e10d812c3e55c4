#pragma once

#include <string>
#include <vector>

#include "flowinfer/rng.hpp"
#include "flowinfer/tape.hpp"
#include "flowinfer/tensor.hpp"

namespace flowinfer {

struct Parameter {
  std::string name;
  Tensor value;
};

// Hands out tape vars for network parameters. Two modes:
//  - leaves: every parameter becomes its own leaf (training; the recorded
//    order matches the parameters() order of the networks bound through it).
//  - flat: parameters are carved out of one flat leaf vector, so a whole
//    model can be gradient-checked as a single R^P -> R function.
class VarSource {
 public:
  static VarSource leaves(Tape& tape);
  static VarSource flat(Tape& tape, Var flat_vector);

  Var next(const Tensor& value);
  const std::vector<Var>& taken() const { return taken_; }

 private:
  VarSource(Tape* tape, Var flat) : tape_(tape), flat_(flat) {}
  Tape* tape_;
  Var flat_;
  std::size_t offset_ = 0;
  std::vector<Var> taken_;
};

// Concatenates parameter values into one flat vector (for grad checks).
Tensor flatten_parameters(const std::vector<Parameter*>& params);
std::size_t parameter_count(const std::vector<Parameter*>& params);

enum class FinalInit { kGlorot, kZero };

// Fully connected stack: hidden layers with ELU, linear output layer.
// Hidden weights are Glorot-uniform; biases start at zero. The output layer
// is zero-initialized when requested so a coupling block starts as the
// identity map.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, std::size_t in_dim, const std::vector<std::size_t>& hidden,
      std::size_t out_dim, RngStream& init, FinalInit final_init);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  struct Bound {
    const Mlp* net = nullptr;
    std::vector<Var> vars;  // W0, b0, W1, b1, ...
    Var operator()(Tape& tape, Var x) const;  // x: [rows, in_dim]
  };
  Bound bind(Tape& tape, VarSource& source) const;

 private:
  std::size_t in_dim_ = 0;
  std::size_t out_dim_ = 0;
  std::vector<Parameter> params_;
};

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      RngStream& stream);

}  // namespace flowinfer
