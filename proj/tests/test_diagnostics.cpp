#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "flowinfer/diagnostics.hpp"
#include "flowinfer/linalg.hpp"
#include "flowinfer/stats.hpp"
#include "metric_oracles.hpp"

using namespace flowinfer;
using namespace flowinfer::oracles;

namespace {

// Posterior-equals-prior toy model: the data carry no information at all.
class ZeroInformationModel final : public SimulatorModel {
 public:
  std::string name() const override { return "zero_info"; }
  std::size_t param_dim() const override { return 2; }
  std::size_t data_dim() const override { return 1; }
  DatasetKind kind() const override { return DatasetKind::kIidSet; }
  std::vector<std::string> param_names() const override { return {"a", "b"}; }
  Tensor sample_prior(RngStream& stream) const override {
    return sample_gaussian(stream, {2});
  }
  Tensor simulate(const Tensor&, std::size_t size,
                  RngStream& stream) const override {
    return sample_gaussian(stream, {size, 1});
  }
};

}  // namespace

TEST_CASE("nrmse follows the printed formula") {
  std::vector<double> truth = {0.0, 1.0};
  CHECK(nrmse(truth, truth) == 0.0);
  CHECK(nrmse(truth, {1.0, 0.0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS((void)nrmse({2.0, 2.0}, {1.0, 3.0}), ContractError);
}

TEST_CASE("r-squared matches its definition and hand example") {
  std::vector<double> truth = {0.0, 1.0};
  CHECK(r_squared(truth, truth) == 1.0);
  CHECK(r_squared({1.0, 2.0, 3.0}, {2.0, 2.0, 2.0}) == doctest::Approx(0.0));
  CHECK(r_squared(truth, {1.0, 0.0}) == doctest::Approx(-3.0));
  CHECK_THROWS_AS((void)r_squared({1.0, 1.0}, {1.0, 2.0}), ContractError);
}

TEST_CASE("recovery metrics agree with brute-force oracles to 1e-10") {
  RngStream stream(301, 0);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = 5 + static_cast<std::size_t>(stream.uniform_int(0, 45));
    std::vector<double> truth(n), est(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = stream.uniform(-3.0, 7.0);
      est[i] = truth[i] + stream.gaussian(0.0, 0.5);
    }
    CHECK(std::fabs(nrmse(truth, est) - nrmse_oracle(truth, est)) < 1e-10);
    CHECK(std::fabs(r_squared(truth, est) - r_squared_oracle(truth, est)) <
          1e-10);

    // Affine rescales move the metric exactly as the formula dictates.
    double a = stream.uniform(0.5, 3.0), b = stream.uniform(-2.0, 2.0);
    std::vector<double> truth_s(n), est_s(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth_s[i] = a * truth[i] + b;
      est_s[i] = a * est[i] + b;
    }
    CHECK(std::fabs(nrmse(truth_s, est_s) - nrmse_oracle(truth_s, est_s)) <
          1e-10);
    CHECK(std::fabs(nrmse(truth_s, est_s) - std::sqrt(a) * nrmse(truth, est)) <
          1e-8);
    CHECK(std::fabs(r_squared(truth_s, est_s) - r_squared(truth, est)) < 1e-8);
  }
}

TEST_CASE("calibration error of degenerate and exact samplers") {
  SUBCASE("point-mass draws at the truth cover every interval") {
    RngStream stream(302, 0);
    std::vector<Tensor> draws;
    Tensor truths({60, 1});
    for (std::size_t m = 0; m < 60; ++m) {
      double v = stream.gaussian(0.0, 1.0);
      truths.at(m, 0) = v;
      draws.push_back(Tensor::full({100, 1}, v));
    }
    CalibrationResult r = calibration_error(draws, truths);
    CHECK(r.per_parameter[0] == doctest::Approx(0.5));
  }
  SUBCASE("an exact conjugate sampler is well calibrated") {
    MvnModel model(Tensor::identity(2));
    RngStream stream(303, 0);
    std::vector<Tensor> draws;
    Tensor truths({300, 2});
    for (std::size_t m = 0; m < 300; ++m) {
      Tensor mu = model.sample_prior(stream);
      Tensor x = model.simulate(mu, 1, stream);
      for (std::size_t j = 0; j < 2; ++j) truths.at(m, j) = mu[j];
      draws.push_back(model.sample_oracle(x.reshaped({2}), 2000, stream));
    }
    CalibrationResult r = calibration_error(draws, truths);
    for (double err : r.per_parameter) {
      CHECK(err >= 0.0);
      CHECK(err < 0.05);
    }
    CHECK_FALSE(r.low_sample_warning);
  }
  SUBCASE("too few datasets attach a warning") {
    std::vector<Tensor> draws(10, Tensor::full({50, 1}, 0.0));
    Tensor truths({10, 1});
    CHECK(calibration_error(draws, truths).low_sample_warning);
  }
}

TEST_CASE("sbc rank statistics") {
  ZeroInformationModel model;
  SUBCASE("ranks are bounded by 0 and the draw count") {
    PosteriorFn low = [](const Tensor&, std::size_t draws, RngStream&) {
      return Tensor::full({draws, 2}, -100.0);
    };
    SbcResult all_low = sbc(model, low, 10, 39, 4, 20, 304);
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t rank : all_low.ranks[j]) CHECK(rank == 39);
    }
    PosteriorFn high = [](const Tensor&, std::size_t draws, RngStream&) {
      return Tensor::full({draws, 2}, 100.0);
    };
    SbcResult all_high = sbc(model, high, 10, 39, 4, 20, 305);
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t rank : all_high.ranks[j]) CHECK(rank == 0);
    }
  }
  SUBCASE("the prior sampler is uniform when the posterior is the prior") {
    PosteriorFn prior_sampler = [](const Tensor&, std::size_t draws,
                                   RngStream& stream) {
      return sample_gaussian(stream, {draws, 2});
    };
    std::size_t passes = 0;
    const std::size_t suites = 20;
    for (std::size_t s = 0; s < suites; ++s) {
      SbcResult r = sbc(model, prior_sampler, 200, 199, 4, 20, 400 + s);
      bool ok = true;
      for (double p : r.p_value) ok &= p > 0.01;
      passes += ok;
    }
    CHECK(passes >= suites * 95 / 100);
  }
  SUBCASE("a biased sampler is rejected") {
    PosteriorFn biased = [](const Tensor&, std::size_t draws,
                            RngStream& stream) {
      Tensor out = sample_gaussian(stream, {draws, 2});
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += 0.6;
      return out;
    };
    SbcResult r = sbc(model, biased, 200, 199, 4, 20, 306);
    for (double p : r.p_value) CHECK(p < 0.01);
  }
}

TEST_CASE("mmd properties and oracle agreement") {
  RngStream stream(307, 0);
  Tensor x = sample_gaussian(stream, {40, 2});
  SUBCASE("identical samples score zero") {
    CHECK(mmd(x, x) < 1e-12);
  }
  SUBCASE("well-separated clouds score above one half") {
    Tensor far = sample_gaussian(stream, {40, 2});
    for (std::size_t i = 0; i < far.extent(0); ++i) far.at(i, 0) += 12.0;
    CHECK(mmd(x, far) > 0.5);
  }
  SUBCASE("the statistic is symmetric") {
    Tensor y = sample_gaussian(stream, {25, 2});
    CHECK(mmd(x, y) == doctest::Approx(mmd(y, x)).epsilon(1e-12));
  }
  SUBCASE("matches the brute-force oracle to 1e-10") {
    for (int rep = 0; rep < 100; ++rep) {
      std::size_t na = 3 + static_cast<std::size_t>(stream.uniform_int(0, 17));
      std::size_t nb = 3 + static_cast<std::size_t>(stream.uniform_int(0, 17));
      Tensor a = sample_gaussian(stream, {na, 3});
      Tensor b = sample_gaussian(stream, {nb, 3});
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += 0.8;
      CHECK(std::fabs(mmd(a, b) - mmd_oracle(a, b)) < 1e-10);
    }
  }
}

TEST_CASE("gaussian kl divergences") {
  SUBCASE("identical distributions have zero divergence") {
    Tensor mean = Tensor::from_vector({0.3, -1.0});
    Tensor cov({2, 2}, {2.0, 0.3, 0.3, 1.0});
    CHECK(std::fabs(kl_gaussian_full(mean, cov, mean, cov)) < 1e-12);
  }
  SUBCASE("unit-variance unit-shift is exactly one half") {
    Tensor mp = Tensor::from_vector({0.0});
    Tensor mq = Tensor::from_vector({1.0});
    Tensor s = Tensor::from_vector({1.0});
    CHECK(kl_gaussian_diag(mp, s, mq, s) == doctest::Approx(0.5));
  }
  SUBCASE("full formula reduces to the diagonal one") {
    RngStream stream(308, 0);
    for (int rep = 0; rep < 100; ++rep) {
      Tensor mp = sample_gaussian(stream, {3});
      Tensor mq = sample_gaussian(stream, {3});
      Tensor sp({3}), sq({3});
      for (std::size_t i = 0; i < 3; ++i) {
        sp[i] = stream.uniform(0.3, 2.0);
        sq[i] = stream.uniform(0.3, 2.0);
      }
      Tensor cp({3, 3}), cq({3, 3});
      for (std::size_t i = 0; i < 3; ++i) {
        cp.at(i, i) = sp[i] * sp[i];
        cq.at(i, i) = sq[i] * sq[i];
      }
      double full = kl_gaussian_full(mp, cp, mq, cq);
      double diag = kl_gaussian_diag(mp, sp, mq, sq);
      CHECK(std::fabs(full - diag) < 1e-10);
      CHECK(std::fabs(full - kl_full_oracle(mp, cp, mq, cq)) < 1e-10);
    }
  }
  SUBCASE("non positive-definite covariances are rejected") {
    Tensor mean({2});
    Tensor bad({2, 2}, {1.0, 2.0, 2.0, 1.0});
    Tensor good = Tensor::identity(2);
    CHECK_THROWS_AS((void)kl_gaussian_full(mean, bad, mean, good),
                    ParameterError);
  }
}

TEST_CASE("mvn kl validation harness") {
  MvnModel model(MvnModel::kms_covariance(5));
  RngStream stream(309, 0);
  std::vector<Tensor> observations;
  for (int i = 0; i < 100; ++i) {
    Tensor mu = model.sample_prior(stream);
    observations.push_back(model.simulate(mu, 1, stream).reshaped({5}));
  }
  SUBCASE("oracle draws set the sampling-noise floor") {
    MvnKlResult r = mvn_kl_validation(
        model,
        [&](const Tensor& obs) { return model.sample_oracle(obs, 5000, stream); },
        observations);
    CHECK(r.mean_kl >= 0.0);
    CHECK(r.mean_kl < 0.02);
    CHECK(r.ridge_flagged == 0);
  }
  SUBCASE("a one-sigma mean shift in one dimension costs about half a nat") {
    MvnKlResult r = mvn_kl_validation(
        model,
        [&](const Tensor& obs) {
          Tensor draws = model.sample_oracle(obs, 20000, stream);
          MvnPosterior post = model.posterior_oracle(obs);
          double sigma = std::sqrt(post.covariance.at(0, 0));
          for (std::size_t l = 0; l < draws.extent(0); ++l) {
            draws.at(l, 0) += sigma;
          }
          return draws;
        },
        observations);
    CHECK(r.mean_kl == doctest::Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("chi-square and ks helpers match reference values") {
  // 0.95 quantile of chi-square with 19 dof is 30.1435.
  CHECK(stats::chi_square_sf(30.1435, 19.0) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(stats::chi_square_sf(0.0, 19.0) == 1.0);

  RngStream stream(310, 0);
  std::vector<double> uniform;
  for (int i = 0; i < 500; ++i) uniform.push_back(stream.uniform01());
  CHECK(stats::ks_uniform_pvalue(uniform) > 0.01);
  std::vector<double> shifted;
  for (int i = 0; i < 500; ++i) shifted.push_back(0.5 * stream.uniform01());
  CHECK(stats::ks_uniform_pvalue(shifted) < 1e-6);
}

TEST_CASE("bootstrap standard errors shrink with sample size") {
  RngStream stream(311, 0);
  auto make = [&](std::size_t n) {
    std::vector<double> truth(n), est(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = stream.gaussian(0.0, 1.0);
      est[i] = truth[i] + stream.gaussian(0.0, 0.3);
    }
    return std::make_pair(truth, est);
  };
  auto [t_small, e_small] = make(30);
  auto [t_large, e_large] = make(3000);
  RngStream boot(312, 0);
  double se_small = bootstrap_stderr(r_squared, t_small, e_small, 1000, boot);
  double se_large = bootstrap_stderr(r_squared, t_large, e_large, 1000, boot);
  CHECK(se_small > se_large);
  CHECK(se_large > 0.0);
}
