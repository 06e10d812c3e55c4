#include "flowinfer/flow.hpp"

#include <cmath>
#include <numeric>

namespace flowinfer {

namespace {

// Soft clamp c * (2/pi) * atan(x / c): identity near zero, saturates at +-c.
Var soft_clamp(Tape& tape, Var x, double clamp) {
  return tape.scale(tape.atan(tape.scale(x, 1.0 / clamp)), clamp * 2.0 / M_PI);
}

}  // namespace

Permutation::Permutation(std::vector<std::size_t> forward)
    : fwd_(std::move(forward)) {
  inv_.assign(fwd_.size(), fwd_.size());
  for (std::size_t i = 0; i < fwd_.size(); ++i) {
    if (fwd_[i] >= fwd_.size() || inv_[fwd_[i]] != fwd_.size()) {
      throw DimensionError("permutation: not a bijection");
    }
    inv_[fwd_[i]] = i;
  }
}

Permutation Permutation::random(std::size_t dim, RngStream& stream) {
  std::vector<std::size_t> idx(dim);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = dim; i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(stream.uniform_int(0, i - 1));
    std::swap(idx[i - 1], idx[j]);
  }
  return Permutation(std::move(idx));
}

CouplingBlock::CouplingBlock(const std::string& name, std::size_t dim,
                             std::size_t cond_dim, std::size_t hidden_units,
                             std::size_t hidden_layers, double clamp,
                             RngStream& init)
    : dim_(dim), first_size_(dim / 2), clamp_(clamp) {
  if (dim < 2) {
    throw ConfigError("coupling needs dim >= 2, got " + std::to_string(dim));
  }
  std::size_t second_size = dim - first_size_;
  std::vector<std::size_t> hidden(hidden_layers, hidden_units);
  // scale/shift of the first half read (second half, summary) and vice versa.
  scale_first_ = Mlp(name + ".s1", second_size + cond_dim, hidden, first_size_,
                     init, FinalInit::kZero);
  shift_first_ = Mlp(name + ".t1", second_size + cond_dim, hidden, first_size_,
                     init, FinalInit::kZero);
  scale_second_ = Mlp(name + ".s2", first_size_ + cond_dim, hidden, second_size,
                      init, FinalInit::kZero);
  shift_second_ = Mlp(name + ".t2", first_size_ + cond_dim, hidden, second_size,
                      init, FinalInit::kZero);
}

std::vector<Parameter*> CouplingBlock::parameters() {
  std::vector<Parameter*> out;
  for (Mlp* net : {&scale_first_, &shift_first_, &scale_second_, &shift_second_}) {
    for (Parameter* p : net->parameters()) out.push_back(p);
  }
  return out;
}

CouplingBlock::Bound CouplingBlock::bind(Tape& tape, VarSource& source) const {
  Bound b;
  b.block = this;
  b.scale_first = scale_first_.bind(tape, source);
  b.shift_first = shift_first_.bind(tape, source);
  b.scale_second = scale_second_.bind(tape, source);
  b.shift_second = shift_second_.bind(tape, source);
  return b;
}

std::pair<Var, Var> CouplingBlock::Bound::forward(Tape& tape, Var u,
                                                  Var cond) const {
  std::size_t d1 = block->split();
  std::size_t d = block->dim();
  Var u1 = tape.slice(u, 1, 0, d1);
  Var u2 = tape.slice(u, 1, d1, d);

  Var in1 = tape.concat(u2, cond, 1);
  Var s1 = soft_clamp(tape, scale_first(tape, in1), block->clamp());
  Var t1 = shift_first(tape, in1);
  Var v1 = tape.add(tape.multiply(u1, tape.exp(s1)), t1);

  Var in2 = tape.concat(v1, cond, 1);
  Var s2 = soft_clamp(tape, scale_second(tape, in2), block->clamp());
  Var t2 = shift_second(tape, in2);
  Var v2 = tape.add(tape.multiply(u2, tape.exp(s2)), t2);

  Var v = tape.concat(v1, v2, 1);
  Var logdet = tape.add(tape.sum_over_axis(s1, 1), tape.sum_over_axis(s2, 1));
  return {v, logdet};
}

Var CouplingBlock::Bound::inverse(Tape& tape, Var v, Var cond) const {
  std::size_t d1 = block->split();
  std::size_t d = block->dim();
  Var v1 = tape.slice(v, 1, 0, d1);
  Var v2 = tape.slice(v, 1, d1, d);

  Var in2 = tape.concat(v1, cond, 1);
  Var s2 = soft_clamp(tape, scale_second(tape, in2), block->clamp());
  Var t2 = shift_second(tape, in2);
  Var u2 = tape.multiply(tape.add(v2, tape.scale(t2, -1.0)),
                         tape.exp(tape.scale(s2, -1.0)));

  Var in1 = tape.concat(u2, cond, 1);
  Var s1 = soft_clamp(tape, scale_first(tape, in1), block->clamp());
  Var t1 = shift_first(tape, in1);
  Var u1 = tape.multiply(tape.add(v1, tape.scale(t1, -1.0)),
                         tape.exp(tape.scale(s1, -1.0)));

  return tape.concat(u1, u2, 1);
}

ConditionalInn::ConditionalInn(const FlowSpec& spec, RngStream& init)
    : spec_(spec) {
  if (spec.dim < 2) {
    throw ConfigError("flow dimension must be >= 2 (coupling needs two "
                      "nonempty halves), got " + std::to_string(spec.dim));
  }
  if (spec.num_blocks == 0) throw ConfigError("flow needs at least one block");
  for (std::size_t k = 0; k < spec.num_blocks; ++k) {
    perms_.push_back(Permutation::random(spec.dim, init));
    blocks_.emplace_back("flow.block" + std::to_string(k), spec.dim,
                         spec.cond_dim, spec.hidden_units, spec.hidden_layers,
                         spec.clamp, init);
  }
}

std::vector<Parameter*> ConditionalInn::parameters() {
  std::vector<Parameter*> out;
  for (auto& block : blocks_) {
    for (Parameter* p : block.parameters()) out.push_back(p);
  }
  return out;
}

void ConditionalInn::set_permutations(
    const std::vector<std::vector<std::size_t>>& perms) {
  if (perms.size() != perms_.size()) {
    throw DimensionError("checkpoint holds " + std::to_string(perms.size()) +
                         " permutations, network expects " +
                         std::to_string(perms_.size()));
  }
  for (std::size_t i = 0; i < perms.size(); ++i) {
    if (perms[i].size() != spec_.dim) {
      throw DimensionError("permutation " + std::to_string(i) +
                           " has wrong length");
    }
    perms_[i] = Permutation(perms[i]);
  }
}

ConditionalInn::Bound ConditionalInn::bind(Tape& tape,
                                           VarSource& source) const {
  Bound b;
  b.net = this;
  b.blocks.reserve(blocks_.size());
  for (const auto& block : blocks_) b.blocks.push_back(block.bind(tape, source));
  return b;
}

std::pair<Var, Var> ConditionalInn::Bound::forward(Tape& tape, Var theta,
                                                   Var cond) const {
  Var state = theta;
  Var logdet;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    state = tape.permute_cols(state, net->permutations()[k].forward());
    auto [next, ld] = blocks[k].forward(tape, state, cond);
    state = next;
    logdet = k == 0 ? ld : tape.add(logdet, ld);
  }
  return {state, logdet};
}

Var ConditionalInn::Bound::inverse(Tape& tape, Var latent, Var cond) const {
  Var state = latent;
  for (std::size_t k = blocks.size(); k-- > 0;) {
    state = blocks[k].inverse(tape, state, cond);
    state = tape.permute_cols(state, net->permutations()[k].inverse());
  }
  return state;
}

Var ConditionalInn::Bound::log_density(Tape& tape, Var theta, Var cond) const {
  auto [latent, logdet] = forward(tape, theta, cond);
  Var sq = tape.multiply(latent, latent);
  Var norm = tape.scale(tape.sum_over_axis(sq, 1), -0.5);
  double base = -0.5 * static_cast<double>(net->spec().dim) *
                std::log(2.0 * M_PI);
  return tape.add(tape.add(norm, logdet), tape.constant(base));
}

std::pair<Tensor, Tensor> ConditionalInn::forward(const Tensor& theta,
                                                  const Tensor& cond) const {
  Tape tape;
  VarSource source = VarSource::leaves(tape);
  Bound bound = bind(tape, source);
  auto [z, ld] = bound.forward(tape, tape.leaf(theta), tape.leaf(cond));
  return {tape.value(z), tape.value(ld)};
}

Tensor ConditionalInn::inverse(const Tensor& latent, const Tensor& cond) const {
  Tape tape;
  VarSource source = VarSource::leaves(tape);
  Bound bound = bind(tape, source);
  Var theta = bound.inverse(tape, tape.leaf(latent), tape.leaf(cond));
  return tape.value(theta);
}

Tensor ConditionalInn::log_density(const Tensor& theta,
                                   const Tensor& cond) const {
  Tape tape;
  VarSource source = VarSource::leaves(tape);
  Bound bound = bind(tape, source);
  Var ld = bound.log_density(tape, tape.leaf(theta), tape.leaf(cond));
  return tape.value(ld);
}

Tensor tile_rows(const Tensor& row, std::size_t rows) {
  if (row.rank() != 2 || row.extent(0) != 1) {
    throw DimensionError("tile_rows: expected [1, n], got " +
                         shape_str(row.shape()));
  }
  Tensor out({rows, row.extent(1)});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < row.extent(1); ++j) out.at(i, j) = row.at(0, j);
  }
  return out;
}

}  // namespace flowinfer
