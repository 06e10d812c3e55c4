#include "flowinfer/nets.hpp"

#include <cmath>

namespace flowinfer {

VarSource VarSource::leaves(Tape& tape) { return VarSource(&tape, Var{}); }

VarSource VarSource::flat(Tape& tape, Var flat_vector) {
  return VarSource(&tape, flat_vector);
}

Var VarSource::next(const Tensor& value) {
  Var v;
  if (flat_.valid()) {
    std::size_t size = value.size();
    Var piece = tape_->slice(flat_, 0, offset_, offset_ + size);
    v = tape_->reshape(piece, value.shape());
    offset_ += size;
  } else {
    v = tape_->leaf(value);
  }
  taken_.push_back(v);
  return v;
}

Tensor flatten_parameters(const std::vector<Parameter*>& params) {
  std::vector<double> data;
  data.reserve(parameter_count(params));
  for (const Parameter* p : params) {
    data.insert(data.end(), p->value.data(), p->value.data() + p->value.size());
  }
  return Tensor::from_vector(std::move(data));
}

std::size_t parameter_count(const std::vector<Parameter*>& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out,
                      RngStream& stream) {
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = stream.uniform(-limit, limit);
  }
  return t;
}

Mlp::Mlp(std::string name, std::size_t in_dim,
         const std::vector<std::size_t>& hidden, std::size_t out_dim,
         RngStream& init, FinalInit final_init)
    : in_dim_(in_dim), out_dim_(out_dim) {
  std::vector<std::size_t> dims;
  dims.push_back(in_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out_dim);
  for (std::size_t layer = 0; layer + 1 < dims.size(); ++layer) {
    std::size_t fan_in = dims[layer], fan_out = dims[layer + 1];
    bool last = layer + 2 == dims.size();
    Tensor w = (last && final_init == FinalInit::kZero)
                   ? Tensor({fan_in, fan_out})
                   : glorot_uniform({fan_in, fan_out}, fan_in, fan_out, init);
    std::string base = name + ".layer" + std::to_string(layer);
    params_.push_back({base + ".W", std::move(w)});
    params_.push_back({base + ".b", Tensor({fan_out})});
  }
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

Var Mlp::Bound::operator()(Tape& tape, Var x) const {
  std::size_t layers = vars.size() / 2;
  Var h = x;
  for (std::size_t l = 0; l < layers; ++l) {
    h = tape.add(tape.matmul(h, vars[2 * l]), vars[2 * l + 1]);
    if (l + 1 < layers) h = tape.elu(h);
  }
  return h;
}

Mlp::Bound Mlp::bind(Tape& tape, VarSource& source) const {
  Bound b;
  b.net = this;
  b.vars.reserve(params_.size());
  for (const auto& p : params_) b.vars.push_back(source.next(p.value));
  (void)tape;
  return b;
}

}  // namespace flowinfer
