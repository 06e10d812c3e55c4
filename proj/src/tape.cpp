#include "flowinfer/tape.hpp"

#include <cmath>
#include <cstring>

#include "flowinfer/kernels.hpp"

namespace flowinfer {

namespace {

const char* op_name(int op) {
  static const char* names[] = {
      "leaf", "matmul", "add", "multiply", "exp", "log", "tanh", "elu",
      "atan", "concat", "slice", "sum_over_axis", "mean_over_axis",
      "conv1d", "reshape", "scale", "permute_cols"};
  return names[op];
}

// Right-aligned broadcast plan: per output axis, the element stride into each
// operand (0 where the operand's extent is 1 or the axis is missing).
struct BroadcastPlan {
  Shape out;
  std::vector<std::size_t> stride_a;
  std::vector<std::size_t> stride_b;
  bool same_shape = false;
};

BroadcastPlan make_broadcast_plan(const Shape& sa, const Shape& sb,
                                  const char* opname) {
  BroadcastPlan plan;
  if (sa == sb) {
    plan.out = sa;
    plan.same_shape = true;
    return plan;
  }
  std::size_t rank = std::max(sa.size(), sb.size());
  plan.out.resize(rank);
  plan.stride_a.resize(rank);
  plan.stride_b.resize(rank);
  // Element strides of the (right-aligned) operands.
  std::vector<std::size_t> full_a(rank, 1), full_b(rank, 1);
  for (std::size_t i = 0; i < rank; ++i) {
    std::size_t ea = i < rank - sa.size() ? 1 : sa[i - (rank - sa.size())];
    std::size_t eb = i < rank - sb.size() ? 1 : sb[i - (rank - sb.size())];
    if (ea != eb && ea != 1 && eb != 1) {
      throw DimensionError(std::string(opname) + ": cannot broadcast " +
                           shape_str(sa) + " with " + shape_str(sb));
    }
    full_a[i] = ea;
    full_b[i] = eb;
    plan.out[i] = std::max(ea, eb);
  }
  std::size_t sa_stride = 1, sb_stride = 1;
  for (std::size_t i = rank; i-- > 0;) {
    plan.stride_a[i] = full_a[i] == 1 ? 0 : sa_stride;
    plan.stride_b[i] = full_b[i] == 1 ? 0 : sb_stride;
    sa_stride *= full_a[i];
    sb_stride *= full_b[i];
  }
  return plan;
}

// Applies fn(out_index, a_index, b_index) over the whole broadcast space.
template <typename Fn>
void broadcast_walk(const BroadcastPlan& plan, Fn&& fn) {
  std::size_t total = shape_size(plan.out);
  std::size_t rank = plan.out.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < total; ++i) {
    fn(i, ia, ib);
    for (std::size_t ax = rank; ax-- > 0;) {
      idx[ax]++;
      ia += plan.stride_a[ax];
      ib += plan.stride_b[ax];
      if (idx[ax] < plan.out[ax]) break;
      ia -= plan.stride_a[ax] * plan.out[ax];
      ib -= plan.stride_b[ax] * plan.out[ax];
      idx[ax] = 0;
    }
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* opname) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(opname) + ": expected rank " +
                         std::to_string(rank) + " tensor, got " +
                         shape_str(t.shape()));
  }
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

// Decomposes a shape around `axis` into outer * extent * inner.
void axis_split(const Shape& s, std::size_t axis, std::size_t& outer,
                std::size_t& extent, std::size_t& inner) {
  outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  extent = s[axis];
  inner = 1;
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}

}  // namespace

Var Tape::push(Node node, const char* opname) {
  if (!node.value.all_finite()) {
    throw NumericError(std::string("non-finite output in op '") + opname + "'");
  }
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n), "leaf");
}

Var Tape::matmul(Var a, Var b) {
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  require_rank(ta, 2, "matmul");
  require_rank(tb, 2, "matmul");
  if (ta.extent(1) != tb.extent(0)) {
    throw DimensionError("matmul: inner extents differ, " +
                         shape_str(ta.shape()) + " x " + shape_str(tb.shape()));
  }
  std::size_t m = ta.extent(0), k = ta.extent(1), n = tb.extent(1);
  Node node;
  node.op = Op::kMatMul;
  node.a = a.id;
  node.b = b.id;
  node.value = Tensor({m, n});
  kernels::matmul_nn(ta.data(), tb.data(), node.value.data(), m, k, n, false);
  return push(std::move(node), "matmul");
}

namespace {
// [batch, channels, len] + [1, channels, 1]: the conv-bias pattern.
bool is_channel_bias(const Tensor& a, const Tensor& b) {
  return a.rank() == 3 && b.rank() == 3 && b.extent(0) == 1 &&
         b.extent(2) == 1 && b.extent(1) == a.extent(1);
}
}  // namespace

Var Tape::add(Var a, Var b) {
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  BroadcastPlan plan = make_broadcast_plan(ta.shape(), tb.shape(), "add");
  Node node;
  node.op = Op::kAdd;
  node.a = a.id;
  node.b = b.id;
  node.value = Tensor(plan.out);
  double* out = node.value.data();
  if (plan.same_shape) {
    const double* pa = ta.data();
    const double* pb = tb.data();
    for (std::size_t i = 0; i < node.value.size(); ++i) out[i] = pa[i] + pb[i];
  } else if (is_channel_bias(ta, tb)) {
    std::size_t rows = ta.extent(0), channels = ta.extent(1),
                inner = ta.extent(2);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < channels; ++c) {
        const double* src = ta.data() + (r * channels + c) * inner;
        double* dst = out + (r * channels + c) * inner;
        double bias = tb[c];
        for (std::size_t i = 0; i < inner; ++i) dst[i] = src[i] + bias;
      }
    }
  } else {
    broadcast_walk(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      out[i] = ta[ia] + tb[ib];
    });
  }
  return push(std::move(node), "add");
}

Var Tape::multiply(Var a, Var b) {
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  BroadcastPlan plan = make_broadcast_plan(ta.shape(), tb.shape(), "multiply");
  Node node;
  node.op = Op::kMultiply;
  node.a = a.id;
  node.b = b.id;
  node.value = Tensor(plan.out);
  double* out = node.value.data();
  if (plan.same_shape) {
    const double* pa = ta.data();
    const double* pb = tb.data();
    for (std::size_t i = 0; i < node.value.size(); ++i) out[i] = pa[i] * pb[i];
  } else {
    broadcast_walk(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      out[i] = ta[ia] * tb[ib];
    });
  }
  return push(std::move(node), "multiply");
}

Var Tape::exp(Var a) {
  const Tensor& ta = val(a.id);
  Node node;
  node.op = Op::kExp;
  node.a = a.id;
  node.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) node.value[i] = std::exp(ta[i]);
  return push(std::move(node), "exp");
}

Var Tape::log(Var a) {
  const Tensor& ta = val(a.id);
  Node node;
  node.op = Op::kLog;
  node.a = a.id;
  node.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) node.value[i] = std::log(ta[i]);
  return push(std::move(node), "log");
}

Var Tape::tanh(Var a) {
  const Tensor& ta = val(a.id);
  Node node;
  node.op = Op::kTanh;
  node.a = a.id;
  node.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) node.value[i] = std::tanh(ta[i]);
  return push(std::move(node), "tanh");
}

Var Tape::elu(Var a) {
  const Tensor& ta = val(a.id);
  Node node;
  node.op = Op::kElu;
  node.a = a.id;
  node.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) {
    node.value[i] = ta[i] >= 0.0 ? ta[i] : std::expm1(ta[i]);
  }
  return push(std::move(node), "elu");
}

Var Tape::atan(Var a) {
  const Tensor& ta = val(a.id);
  Node node;
  node.op = Op::kAtan;
  node.a = a.id;
  node.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) node.value[i] = std::atan(ta[i]);
  return push(std::move(node), "atan");
}

Var Tape::concat(Var a, Var b, std::size_t axis) {
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (ta.rank() != tb.rank() || axis >= ta.rank()) {
    throw DimensionError("concat: rank mismatch or bad axis");
  }
  for (std::size_t i = 0; i < ta.rank(); ++i) {
    if (i != axis && ta.extent(i) != tb.extent(i)) {
      throw DimensionError("concat: extents differ off-axis, " +
                           shape_str(ta.shape()) + " vs " +
                           shape_str(tb.shape()));
    }
  }
  Shape out_shape = ta.shape();
  out_shape[axis] += tb.extent(axis);
  std::size_t outer, ea, inner;
  axis_split(ta.shape(), axis, outer, ea, inner);
  std::size_t eb = tb.extent(axis);
  Node node;
  node.op = Op::kConcat;
  node.a = a.id;
  node.b = b.id;
  node.axis = axis;
  node.lo = ea;  // remembers the split point
  node.value = Tensor(out_shape);
  double* out = node.value.data();
  for (std::size_t o = 0; o < outer; ++o) {
    std::memcpy(out + o * (ea + eb) * inner, ta.data() + o * ea * inner,
                ea * inner * sizeof(double));
    std::memcpy(out + (o * (ea + eb) + ea) * inner, tb.data() + o * eb * inner,
                eb * inner * sizeof(double));
  }
  return push(std::move(node), "concat");
}

Var Tape::slice(Var a, std::size_t axis, std::size_t lo, std::size_t hi) {
  const Tensor& ta = val(a.id);
  if (axis >= ta.rank() || lo >= hi || hi > ta.extent(axis)) {
    throw DimensionError("slice: range [" + std::to_string(lo) + "," +
                         std::to_string(hi) + ") invalid for axis " +
                         std::to_string(axis) + " of " + shape_str(ta.shape()));
  }
  std::size_t outer, extent, inner;
  axis_split(ta.shape(), axis, outer, extent, inner);
  Shape out_shape = ta.shape();
  out_shape[axis] = hi - lo;
  Node node;
  node.op = Op::kSlice;
  node.a = a.id;
  node.axis = axis;
  node.lo = lo;
  node.hi = hi;
  node.value = Tensor(out_shape);
  double* out = node.value.data();
  std::size_t span = hi - lo;
  for (std::size_t o = 0; o < outer; ++o) {
    std::memcpy(out + o * span * inner, ta.data() + (o * extent + lo) * inner,
                span * inner * sizeof(double));
  }
  return push(std::move(node), "slice");
}

Var Tape::sum_over_axis(Var a, std::size_t axis) {
  const Tensor& ta = val(a.id);
  if (axis >= ta.rank()) throw DimensionError("sum_over_axis: bad axis");
  std::size_t outer, extent, inner;
  axis_split(ta.shape(), axis, outer, extent, inner);
  Node node;
  node.op = Op::kSumAxis;
  node.a = a.id;
  node.axis = axis;
  node.value = Tensor(drop_axis(ta.shape(), axis));
  double* out = node.value.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t e = 0; e < extent; ++e) {
      const double* src = ta.data() + (o * extent + e) * inner;
      double* dst = out + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
  }
  return push(std::move(node), "sum_over_axis");
}

Var Tape::mean_over_axis(Var a, std::size_t axis) {
  const Tensor& ta = val(a.id);
  if (axis >= ta.rank()) throw DimensionError("mean_over_axis: bad axis");
  std::size_t outer, extent, inner;
  axis_split(ta.shape(), axis, outer, extent, inner);
  Node node;
  node.op = Op::kMeanAxis;
  node.a = a.id;
  node.axis = axis;
  node.value = Tensor(drop_axis(ta.shape(), axis));
  double* out = node.value.data();
  double inv = 1.0 / static_cast<double>(extent);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t e = 0; e < extent; ++e) {
      const double* src = ta.data() + (o * extent + e) * inner;
      double* dst = out + o * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
    double* dst = out + o * inner;
    for (std::size_t i = 0; i < inner; ++i) dst[i] *= inv;
  }
  return push(std::move(node), "mean_over_axis");
}

Var Tape::conv1d(Var input, Var kernel, std::size_t stride) {
  const Tensor& ti = val(input.id);
  const Tensor& tk = val(kernel.id);
  require_rank(ti, 3, "conv1d");
  require_rank(tk, 3, "conv1d");
  if (ti.extent(1) != tk.extent(1)) {
    throw DimensionError("conv1d: channel mismatch, input " +
                         shape_str(ti.shape()) + " kernel " +
                         shape_str(tk.shape()));
  }
  if (stride == 0) throw DimensionError("conv1d: stride must be positive");
  std::size_t len = ti.extent(2), width = tk.extent(2);
  if (len < width) {
    throw DimensionError("conv1d: series length " + std::to_string(len) +
                         " shorter than kernel width " + std::to_string(width));
  }
  std::size_t olen = (len - width) / stride + 1;
  Node node;
  node.op = Op::kConv1d;
  node.a = input.id;
  node.b = kernel.id;
  node.stride = stride;
  node.value = Tensor({ti.extent(0), tk.extent(0), olen});
  kernels::conv1d_forward(ti.data(), tk.data(), node.value.data(),
                          ti.extent(0), ti.extent(1), len, tk.extent(0), width,
                          stride);
  return push(std::move(node), "conv1d");
}

Var Tape::reshape(Var a, Shape shape) {
  Node node;
  node.op = Op::kReshape;
  node.a = a.id;
  node.value = val(a.id).reshaped(std::move(shape));
  return push(std::move(node), "reshape");
}

Var Tape::scale(Var a, double c) {
  const Tensor& ta = val(a.id);
  Node node;
  node.op = Op::kScale;
  node.a = a.id;
  node.c = c;
  node.value = Tensor(ta.shape());
  for (std::size_t i = 0; i < ta.size(); ++i) node.value[i] = c * ta[i];
  return push(std::move(node), "scale");
}

Var Tape::permute_cols(Var a, const std::vector<std::size_t>& perm) {
  const Tensor& ta = val(a.id);
  require_rank(ta, 2, "permute_cols");
  if (perm.size() != ta.extent(1)) {
    throw DimensionError("permute_cols: permutation length " +
                         std::to_string(perm.size()) + " vs " +
                         shape_str(ta.shape()));
  }
  Node node;
  node.op = Op::kPermuteCols;
  node.a = a.id;
  node.perm = perm;
  node.value = Tensor(ta.shape());
  std::size_t rows = ta.extent(0), cols = ta.extent(1);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      node.value.at(i, j) = ta.at(i, perm[j]);
    }
  }
  return push(std::move(node), "permute_cols");
}

void Tape::backward(Var root) {
  if (!root.valid() || static_cast<std::size_t>(root.id) >= nodes_.size()) {
    throw DimensionError("backward: invalid root");
  }
  if (nodes_[root.id].value.size() != 1) {
    throw DimensionError("backward: root must be scalar, got " +
                         shape_str(nodes_[root.id].value.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor(n.value.shape());
  nodes_[root.id].grad[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;) backward_node(i);
}

void Tape::backward_node(std::size_t i) {
  Node& n = nodes_[i];
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::kLeaf:
      break;
    case Op::kMatMul: {
      const Tensor& ta = nodes_[n.a].value;
      const Tensor& tb = nodes_[n.b].value;
      std::size_t m = ta.extent(0), k = ta.extent(1), cols = tb.extent(1);
      kernels::matmul_nt(g.data(), tb.data(), nodes_[n.a].grad.data(), m, cols,
                         k, true);
      kernels::matmul_tn(ta.data(), g.data(), nodes_[n.b].grad.data(), m, k,
                         cols, true);
      break;
    }
    case Op::kAdd: {
      Tensor& ga = nodes_[n.a].grad;
      Tensor& gb = nodes_[n.b].grad;
      BroadcastPlan plan = make_broadcast_plan(
          nodes_[n.a].value.shape(), nodes_[n.b].value.shape(), "add");
      if (plan.same_shape) {
        for (std::size_t j = 0; j < g.size(); ++j) {
          ga[j] += g[j];
          gb[j] += g[j];
        }
      } else if (is_channel_bias(nodes_[n.a].value, nodes_[n.b].value)) {
        std::size_t rows = ga.extent(0), channels = ga.extent(1),
                    inner = ga.extent(2);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < channels; ++c) {
            const double* src = g.data() + (r * channels + c) * inner;
            double* dst = ga.data() + (r * channels + c) * inner;
            double acc = 0.0;
            for (std::size_t i = 0; i < inner; ++i) {
              dst[i] += src[i];
              acc += src[i];
            }
            gb[c] += acc;
          }
        }
      } else {
        broadcast_walk(plan, [&](std::size_t o, std::size_t ia, std::size_t ib) {
          ga[ia] += g[o];
          gb[ib] += g[o];
        });
      }
      break;
    }
    case Op::kMultiply: {
      const Tensor& ta = nodes_[n.a].value;
      const Tensor& tb = nodes_[n.b].value;
      Tensor& ga = nodes_[n.a].grad;
      Tensor& gb = nodes_[n.b].grad;
      BroadcastPlan plan =
          make_broadcast_plan(ta.shape(), tb.shape(), "multiply");
      if (plan.same_shape) {
        for (std::size_t j = 0; j < g.size(); ++j) {
          ga[j] += g[j] * tb[j];
          gb[j] += g[j] * ta[j];
        }
      } else {
        broadcast_walk(plan, [&](std::size_t o, std::size_t ia, std::size_t ib) {
          ga[ia] += g[o] * tb[ib];
          gb[ib] += g[o] * ta[ia];
        });
      }
      break;
    }
    case Op::kExp: {
      Tensor& ga = nodes_[n.a].grad;
      for (std::size_t j = 0; j < g.size(); ++j) ga[j] += g[j] * n.value[j];
      break;
    }
    case Op::kLog: {
      const Tensor& ta = nodes_[n.a].value;
      Tensor& ga = nodes_[n.a].grad;
      for (std::size_t j = 0; j < g.size(); ++j) ga[j] += g[j] / ta[j];
      break;
    }
    case Op::kTanh: {
      Tensor& ga = nodes_[n.a].grad;
      for (std::size_t j = 0; j < g.size(); ++j) {
        ga[j] += g[j] * (1.0 - n.value[j] * n.value[j]);
      }
      break;
    }
    case Op::kElu: {
      const Tensor& ta = nodes_[n.a].value;
      Tensor& ga = nodes_[n.a].grad;
      for (std::size_t j = 0; j < g.size(); ++j) {
        ga[j] += ta[j] >= 0.0 ? g[j] : g[j] * (n.value[j] + 1.0);
      }
      break;
    }
    case Op::kAtan: {
      const Tensor& ta = nodes_[n.a].value;
      Tensor& ga = nodes_[n.a].grad;
      for (std::size_t j = 0; j < g.size(); ++j) {
        ga[j] += g[j] / (1.0 + ta[j] * ta[j]);
      }
      break;
    }
    case Op::kConcat: {
      Tensor& ga = nodes_[n.a].grad;
      Tensor& gb = nodes_[n.b].grad;
      std::size_t outer, ea, inner;
      axis_split(ga.shape(), n.axis, outer, ea, inner);
      std::size_t eb = gb.shape()[n.axis];
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = g.data() + o * (ea + eb) * inner;
        double* da = ga.data() + o * ea * inner;
        for (std::size_t j = 0; j < ea * inner; ++j) da[j] += src[j];
        const double* srcb = src + ea * inner;
        double* db = gb.data() + o * eb * inner;
        for (std::size_t j = 0; j < eb * inner; ++j) db[j] += srcb[j];
      }
      break;
    }
    case Op::kSlice: {
      Tensor& ga = nodes_[n.a].grad;
      std::size_t outer, extent, inner;
      axis_split(ga.shape(), n.axis, outer, extent, inner);
      std::size_t span = n.hi - n.lo;
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = g.data() + o * span * inner;
        double* dst = ga.data() + (o * extent + n.lo) * inner;
        for (std::size_t j = 0; j < span * inner; ++j) dst[j] += src[j];
      }
      break;
    }
    case Op::kSumAxis:
    case Op::kMeanAxis: {
      Tensor& ga = nodes_[n.a].grad;
      std::size_t outer, extent, inner;
      axis_split(ga.shape(), n.axis, outer, extent, inner);
      double w = n.op == Op::kMeanAxis ? 1.0 / static_cast<double>(extent) : 1.0;
      for (std::size_t o = 0; o < outer; ++o) {
        const double* src = g.data() + o * inner;
        for (std::size_t e = 0; e < extent; ++e) {
          double* dst = ga.data() + (o * extent + e) * inner;
          for (std::size_t j = 0; j < inner; ++j) dst[j] += w * src[j];
        }
      }
      break;
    }
    case Op::kConv1d: {
      const Tensor& ti = nodes_[n.a].value;
      const Tensor& tk = nodes_[n.b].value;
      kernels::conv1d_backward_input(g.data(), tk.data(),
                                     nodes_[n.a].grad.data(), ti.extent(0),
                                     ti.extent(1), ti.extent(2), tk.extent(0),
                                     tk.extent(2), n.stride);
      kernels::conv1d_backward_kernel(g.data(), ti.data(),
                                      nodes_[n.b].grad.data(), ti.extent(0),
                                      ti.extent(1), ti.extent(2), tk.extent(0),
                                      tk.extent(2), n.stride);
      break;
    }
    case Op::kReshape: {
      Tensor& ga = nodes_[n.a].grad;
      for (std::size_t j = 0; j < g.size(); ++j) ga[j] += g[j];
      break;
    }
    case Op::kScale: {
      Tensor& ga = nodes_[n.a].grad;
      for (std::size_t j = 0; j < g.size(); ++j) ga[j] += n.c * g[j];
      break;
    }
    case Op::kPermuteCols: {
      Tensor& ga = nodes_[n.a].grad;
      std::size_t rows = ga.extent(0), cols = ga.extent(1);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cols; ++j) {
          ga.at(r, n.perm[j]) += g.at(r, j);
        }
      }
      break;
    }
  }
}

double grad_check(const TapeFn& fn, const Tensor& input, double eps) {
  Tensor analytic;
  {
    Tape tape;
    Var x = tape.leaf(input);
    Var y = fn(tape, x);
    tape.backward(y);
    analytic = tape.grad(x);
  }
  auto eval = [&fn](const Tensor& point) {
    Tape tape;
    Var x = tape.leaf(point);
    Var y = fn(tape, x);
    return tape.value(y)[0];
  };
  double worst = 0.0;
  Tensor probe = input;
  for (std::size_t i = 0; i < input.size(); ++i) {
    probe[i] = input[i] + eps;
    double hi = eval(probe);
    probe[i] = input[i] - eps;
    double lo = eval(probe);
    probe[i] = input[i];
    double numeric = (hi - lo) / (2.0 * eps);
    double err = std::fabs(analytic[i] - numeric) /
                 (std::fabs(analytic[i]) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace flowinfer
