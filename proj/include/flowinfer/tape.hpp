#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flowinfer/tensor.hpp"

namespace flowinfer {

// Handle into a Tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over the fixed primitive set the networks need. The tape
// is rebuilt for every training step; backward() walks the recorded ops in
// exact reverse creation order (which is a reverse topological order, since
// an op can only consume previously created nodes) and accumulates gradients
// additively at fan-out.
//
// Every op checks its output for non-finite values and raises a NumericError
// naming the op.
class Tape {
 public:
  Var leaf(Tensor value);
  Var constant(double v) { return leaf(Tensor::scalar(v)); }

  Var matmul(Var a, Var b);           // [m,k] x [k,n]
  Var add(Var a, Var b);              // numpy-style size-1 broadcasting
  Var multiply(Var a, Var b);         // same broadcasting rules
  Var exp(Var a);
  Var log(Var a);
  Var tanh(Var a);
  Var elu(Var a);                     // x >= 0 -> x, else e^x - 1
  Var atan(Var a);
  Var concat(Var a, Var b, std::size_t axis);
  Var slice(Var a, std::size_t axis, std::size_t lo, std::size_t hi);
  Var sum_over_axis(Var a, std::size_t axis);
  Var mean_over_axis(Var a, std::size_t axis);
  Var conv1d(Var input, Var kernel, std::size_t stride);
  Var reshape(Var a, Shape shape);
  Var scale(Var a, double c);
  Var permute_cols(Var a, const std::vector<std::size_t>& perm);  // [m,n]

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and fills grads for every node. root must hold
  // a single value.
  void backward(Var root);

 private:
  enum class Op : std::uint8_t {
    kLeaf, kMatMul, kAdd, kMultiply, kExp, kLog, kTanh, kElu, kAtan,
    kConcat, kSlice, kSumAxis, kMeanAxis, kConv1d, kReshape, kScale,
    kPermuteCols,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::size_t axis = 0;
    std::size_t lo = 0;
    std::size_t hi = 0;
    std::size_t stride = 1;
    double c = 0.0;
    std::vector<std::size_t> perm;
    Tensor value;
    Tensor grad;
  };

  Var push(Node node, const char* opname);
  const Tensor& val(std::int32_t id) const { return nodes_[id].value; }
  void backward_node(std::size_t i);

  std::vector<Node> nodes_;
};

// Maximum over coordinates of |analytic - central difference| /
// (|analytic| + 1e-12) for a scalar-valued tape function at `input`.
using TapeFn = std::function<Var(Tape&, Var)>;
double grad_check(const TapeFn& fn, const Tensor& input, double eps);

}  // namespace flowinfer
