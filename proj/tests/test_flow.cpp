#include <doctest.h>

#include <cmath>

#include "flowinfer/flow.hpp"
#include "test_helpers.hpp"

using namespace flowinfer;
using namespace flowinfer::testing;

namespace {

CouplingBlock make_block(std::size_t dim, std::size_t cond, std::uint64_t seed,
                         std::size_t hidden = 16) {
  RngStream init(seed, 0);
  return CouplingBlock("blk", dim, cond, hidden, 2, 1.9, init);
}

Parameter* find_param(std::vector<Parameter*> params, const std::string& name) {
  for (Parameter* p : params) {
    if (p->name == name) return p;
  }
  REQUIRE(false);
  return nullptr;
}

std::pair<Tensor, Tensor> block_forward(const CouplingBlock& block,
                                        const Tensor& u, const Tensor& cond) {
  Tape tape;
  VarSource src = VarSource::leaves(tape);
  auto bound = block.bind(tape, src);
  auto [v, ld] = bound.forward(tape, tape.leaf(u), tape.leaf(cond));
  return {tape.value(v), tape.value(ld)};
}

Tensor block_inverse(const CouplingBlock& block, const Tensor& v,
                     const Tensor& cond) {
  Tape tape;
  VarSource src = VarSource::leaves(tape);
  auto bound = block.bind(tape, src);
  return tape.value(bound.inverse(tape, tape.leaf(v), tape.leaf(cond)));
}

}  // namespace

TEST_CASE("zero-initialized coupling block is the identity with zero logdet") {
  CouplingBlock block = make_block(4, 3, 1);
  RngStream stream(2, 0);
  Tensor u = sample_gaussian(stream, {5, 4});
  Tensor cond = sample_gaussian(stream, {5, 3});
  auto [v, logdet] = block_forward(block, u, cond);
  for (std::size_t i = 0; i < u.size(); ++i) CHECK(v[i] == u[i]);
  for (std::size_t i = 0; i < 5; ++i) CHECK(logdet[i] == 0.0);
}

TEST_CASE("constant-subnet block matches the hand-evaluated affine map") {
  const double a = 0.7, b = -1.3;
  CouplingBlock block = make_block(2, 1, 3);
  // Zero-initialized output layers make a subnet's output equal its final
  // bias; aim the clamped scale at exactly `a`.
  find_param(block.parameters(), "blk.s1.layer2.b")->value[0] =
      unclamp(a, block.clamp());
  find_param(block.parameters(), "blk.t1.layer2.b")->value[0] = b;

  RngStream stream(4, 0);
  Tensor u = sample_gaussian(stream, {7, 2});
  Tensor cond = sample_gaussian(stream, {7, 1});
  auto [v, logdet] = block_forward(block, u, cond);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(v.at(i, 0) ==
          doctest::Approx(u.at(i, 0) * std::exp(a) + b).epsilon(1e-12));
    CHECK(v.at(i, 1) == u.at(i, 1));
    CHECK(logdet[i] == doctest::Approx(a).epsilon(1e-12));
  }

  // Hand inversion: u1 = (v1 - b) e^{-a}, u2 = v2.
  Tensor back = block_inverse(block, v, cond);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(back.at(i, 0) ==
          doctest::Approx((v.at(i, 0) - b) * std::exp(-a)).epsilon(1e-12));
    CHECK(back.at(i, 1) == doctest::Approx(u.at(i, 1)).epsilon(1e-12));
  }
}

TEST_CASE("block logdet agrees with the finite-difference Jacobian") {
  CouplingBlock block = make_block(3, 2, 5);
  RngStream randomize(6, 0);
  randomize_parameters(block.parameters(), randomize);
  RngStream stream(7, 0);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor u = sample_gaussian(stream, {1, 3});
    Tensor cond = sample_gaussian(stream, {1, 2});
    auto fn = [&](const Tensor& point) {
      auto [v, ld] = block_forward(block, point.reshaped({1, 3}), cond);
      return v.reshaped({3});
    };
    Tensor jac = numerical_jacobian(fn, u.reshaped({3}), 1e-5);
    auto [v, logdet] = block_forward(block, u, cond);
    double reference = log_abs_det(jac);
    CHECK(std::fabs(logdet[0] - reference) /
              (std::fabs(reference) + 1e-12) < 1e-4);
  }
}

TEST_CASE("block round-trips 1000 random pairs below 1e-9") {
  CouplingBlock block = make_block(5, 3, 8);
  RngStream randomize(9, 0);
  randomize_parameters(block.parameters(), randomize);
  RngStream stream(10, 0);
  Tensor u = sample_gaussian(stream, {1000, 5});
  Tensor cond = sample_gaussian(stream, {1000, 3});
  auto [v, logdet] = block_forward(block, u, cond);
  Tensor back = block_inverse(block, v, cond);
  double worst = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    worst = std::max(worst, std::fabs(back[i] - u[i]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("zero-initialized chain is the composed permutation") {
  FlowSpec spec;
  spec.dim = 4;
  spec.cond_dim = 2;
  spec.num_blocks = 3;
  spec.hidden_units = 8;
  RngStream init(11, 0);
  ConditionalInn flow(spec, init);

  RngStream stream(12, 0);
  Tensor theta = sample_gaussian(stream, {6, 4});
  Tensor cond = sample_gaussian(stream, {6, 2});
  auto [z, logdet] = flow.forward(theta, cond);

  // Compose the fixed permutations by hand.
  std::vector<std::size_t> composed = {0, 1, 2, 3};
  for (const Permutation& p : flow.permutations()) {
    std::vector<std::size_t> next(4);
    for (std::size_t j = 0; j < 4; ++j) next[j] = composed[p.forward()[j]];
    composed = next;
  }
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(logdet[i] == 0.0);
    double norm_in = 0.0, norm_out = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(z.at(i, j) == theta.at(i, composed[j]));
      norm_in += theta.at(i, j) * theta.at(i, j);
      norm_out += z.at(i, j) * z.at(i, j);
    }
    CHECK(norm_in == doctest::Approx(norm_out).epsilon(1e-12));
  }

  Tensor back = flow.inverse(z, cond);
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i] == doctest::Approx(theta[i]).epsilon(1e-12));
  }
}

TEST_CASE("chain round-trips 1000 random pairs below 1e-8") {
  FlowSpec spec;
  spec.dim = 5;
  spec.cond_dim = 4;
  spec.num_blocks = 6;
  spec.hidden_units = 16;
  RngStream init(13, 0);
  ConditionalInn flow(spec, init);
  RngStream randomize(14, 0);
  randomize_parameters(flow.parameters(), randomize);

  RngStream stream(15, 0);
  Tensor theta = sample_gaussian(stream, {1000, 5});
  Tensor cond = sample_gaussian(stream, {1000, 4});
  auto [z, logdet] = flow.forward(theta, cond);
  Tensor back = flow.inverse(z, cond);
  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    worst = std::max(worst, std::fabs(back[i] - theta[i]));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("chain logdet agrees with the finite-difference Jacobian") {
  FlowSpec spec;
  spec.dim = 4;
  spec.cond_dim = 2;
  spec.num_blocks = 3;
  spec.hidden_units = 12;
  RngStream init(16, 0);
  ConditionalInn flow(spec, init);
  RngStream randomize(17, 0);
  randomize_parameters(flow.parameters(), randomize);

  RngStream stream(18, 0);
  for (int rep = 0; rep < 3; ++rep) {
    Tensor theta = sample_gaussian(stream, {1, 4});
    Tensor cond = sample_gaussian(stream, {1, 2});
    auto fn = [&](const Tensor& point) {
      auto [z, ld] = flow.forward(point.reshaped({1, 4}), cond);
      return z.reshaped({4});
    };
    Tensor jac = numerical_jacobian(fn, theta.reshaped({4}), 1e-5);
    auto [z, logdet] = flow.forward(theta, cond);
    double reference = log_abs_det(jac);
    CHECK(std::fabs(logdet[0] - reference) /
              (std::fabs(reference) + 1e-12) < 1e-4);
  }
}

TEST_CASE("chain inverse equals the step-by-step block inversion") {
  FlowSpec spec;
  spec.dim = 4;
  spec.cond_dim = 3;
  spec.num_blocks = 4;
  spec.hidden_units = 8;
  RngStream init(19, 0);
  ConditionalInn flow(spec, init);
  RngStream randomize(20, 0);
  randomize_parameters(flow.parameters(), randomize);

  RngStream stream(21, 0);
  Tensor z = sample_gaussian(stream, {3, 4});
  Tensor cond = sample_gaussian(stream, {3, 3});
  Tensor direct = flow.inverse(z, cond);

  // Independent inversion: walk the stages backwards one at a time.
  Tape tape;
  VarSource src = VarSource::leaves(tape);
  auto bound = flow.bind(tape, src);
  Var state = tape.leaf(z);
  Var cond_var = tape.leaf(cond);
  for (std::size_t k = spec.num_blocks; k-- > 0;) {
    state = bound.blocks[k].inverse(tape, state, cond_var);
    state = tape.permute_cols(state, flow.permutations()[k].inverse());
  }
  const Tensor& manual = tape.value(state);
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(direct[i] == doctest::Approx(manual[i]).epsilon(1e-12));
  }
}

TEST_CASE("log density of a fresh network at the origin") {
  FlowSpec spec;
  spec.dim = 3;
  spec.cond_dim = 2;
  spec.num_blocks = 2;
  spec.hidden_units = 8;
  RngStream init(22, 0);
  ConditionalInn flow(spec, init);
  Tensor theta({1, 3});
  RngStream stream(23, 0);
  Tensor cond = sample_gaussian(stream, {1, 2});
  Tensor density = flow.log_density(theta, cond);
  CHECK(density[0] ==
        doctest::Approx(-1.5 * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("untrained density integrates to one on a 2-d grid") {
  FlowSpec spec;
  spec.dim = 2;
  spec.cond_dim = 3;
  spec.num_blocks = 3;
  spec.hidden_units = 16;
  RngStream init(24, 0);
  ConditionalInn flow(spec, init);
  RngStream randomize(25, 0);
  randomize_parameters(flow.parameters(), randomize);

  RngStream stream(26, 0);
  Tensor cond_row = sample_gaussian(stream, {1, 3});

  // Bounding box from pushed-back latent draws, padded.
  Tensor latent = sample_gaussian(stream, {2000, 2});
  Tensor support = flow.inverse(latent, tile_rows(cond_row, 2000));
  double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
  for (std::size_t i = 0; i < 2000; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      lo[j] = std::min(lo[j], support.at(i, j));
      hi[j] = std::max(hi[j], support.at(i, j));
    }
  }
  const std::size_t grid = 400;
  double span0 = hi[0] - lo[0], span1 = hi[1] - lo[1];
  lo[0] -= 0.5 * span0; hi[0] += 0.5 * span0;
  lo[1] -= 0.5 * span1; hi[1] += 0.5 * span1;
  double dx = (hi[0] - lo[0]) / grid, dy = (hi[1] - lo[1]) / grid;

  Tensor points({grid * grid, 2});
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      points.at(i * grid + j, 0) = lo[0] + (i + 0.5) * dx;
      points.at(i * grid + j, 1) = lo[1] + (j + 0.5) * dy;
    }
  }
  Tensor densities =
      flow.log_density(points, tile_rows(cond_row, grid * grid));
  double mass = 0.0;
  for (std::size_t i = 0; i < densities.size(); ++i) {
    mass += std::exp(densities[i]) * dx * dy;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("appending an identity block leaves the density unchanged") {
  FlowSpec spec;
  spec.dim = 3;
  spec.cond_dim = 2;
  spec.num_blocks = 2;
  spec.hidden_units = 8;
  RngStream init_a(27, 0);
  ConditionalInn flow_a(spec, init_a);
  RngStream randomize(28, 0);
  randomize_parameters(flow_a.parameters(), randomize);

  FlowSpec spec_b = spec;
  spec_b.num_blocks = 3;
  RngStream init_b(29, 0);
  ConditionalInn flow_b(spec_b, init_b);
  // Copy the trained blocks; the appended third block keeps its
  // zero-initialized output layers and is therefore the identity.
  auto params_a = flow_a.parameters();
  auto params_b = flow_b.parameters();
  for (Parameter* pa : params_a) {
    for (Parameter* pb : params_b) {
      if (pb->name == pa->name) pb->value = pa->value;
    }
  }
  std::vector<std::vector<std::size_t>> perms;
  for (const Permutation& p : flow_a.permutations()) perms.push_back(p.forward());
  perms.push_back(flow_b.permutations()[2].forward());
  flow_b.set_permutations(perms);

  RngStream stream(30, 0);
  Tensor theta = sample_gaussian(stream, {20, 3});
  Tensor cond = sample_gaussian(stream, {20, 2});
  Tensor da = flow_a.log_density(theta, cond);
  Tensor db = flow_b.log_density(theta, cond);
  for (std::size_t i = 0; i < da.size(); ++i) {
    CHECK(std::fabs(da[i] - db[i]) < 1e-9);
  }
}

TEST_CASE("one-dimensional flows are rejected") {
  FlowSpec spec;
  spec.dim = 1;
  RngStream init(31, 0);
  CHECK_THROWS_AS(ConditionalInn(spec, init), ConfigError);
}

TEST_CASE("coupling-block loss gradient passes grad_check over all weights") {
  CouplingBlock block = make_block(3, 2, 32, 8);
  RngStream randomize(33, 0);
  randomize_parameters(block.parameters(), randomize);
  RngStream stream(34, 0);
  Tensor u = sample_gaussian(stream, {4, 3});
  Tensor cond = sample_gaussian(stream, {4, 2});

  Tensor flat = flatten_parameters(block.parameters());
  auto loss_fn = [&](Tape& tape, Var weights) {
    VarSource src = VarSource::flat(tape, weights);
    auto bound = block.bind(tape, src);
    auto [v, logdet] = bound.forward(tape, tape.leaf(u), tape.leaf(cond));
    Var half_norm =
        tape.scale(tape.sum_over_axis(tape.multiply(v, v), 1), 0.5);
    Var per_row = tape.add(half_norm, tape.scale(logdet, -1.0));
    return tape.mean_over_axis(per_row, 0);
  };
  CHECK(grad_check(loss_fn, flat, 1e-6) < 1e-4);
}
