#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "flowinfer/rng.hpp"
#include "flowinfer/tensor.hpp"

namespace flowinfer {

enum class DatasetKind { kIidSet, kTimeSeries, kSingleVector };

// Componentwise affine map taking parameters to a standardized space the flow
// operates in. Fixed at construction from the prior, so it is a bijection
// with a constant log-Jacobian that density evaluations must account for.
struct ThetaScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  static ThetaScaler identity(std::size_t dim);
  Tensor to_latent(const Tensor& theta_rows) const;    // [m, d] -> [m, d]
  Tensor from_latent(const Tensor& latent_rows) const;
  // log |d latent / d theta| summed over components (negative for scale > 1).
  double log_jacobian() const;
};

// One forward model behind a single contract: a prior sampler and a
// simulator that is a pure function of (theta, size, stream state).
class SimulatorModel {
 public:
  virtual ~SimulatorModel() = default;
  virtual std::string name() const = 0;
  virtual std::size_t param_dim() const = 0;
  virtual std::size_t data_dim() const = 0;
  virtual DatasetKind kind() const = 0;
  virtual std::vector<std::string> param_names() const = 0;
  virtual Tensor sample_prior(RngStream& stream) const = 0;  // [D]
  // Returns [size, data_dim]; throws SimulationRejected for divergent draws.
  virtual Tensor simulate(const Tensor& theta, std::size_t size,
                          RngStream& stream) const = 0;
  // Fixed preprocessing applied to a dataset before the summary network.
  virtual void transform_data(Tensor& dataset) const { (void)dataset; }
  virtual ThetaScaler theta_scaler() const {
    return ThetaScaler::identity(param_dim());
  }
  // Projects a parameter vector into the prior support (used only when
  // re-simulating from posterior point estimates).
  virtual Tensor clamp_to_support(const Tensor& theta) const { return theta; }
};

// ---------------------------------------------------------------------------
// Multivariate normal toy model: mu ~ N(0, I), one observation x ~ N(mu,
// Sigma) with Sigma known, so the posterior over mu is Gaussian in closed
// form and serves as an exact oracle.
struct MvnPosterior {
  Tensor mean;        // m = Lambda Sigma^-1 x
  Tensor covariance;  // Lambda = (I + Sigma^-1)^-1
};

class MvnModel final : public SimulatorModel {
 public:
  explicit MvnModel(Tensor sigma);  // throws ParameterError if not SPD
  static Tensor kms_covariance(std::size_t dim, double rho = 0.5);

  std::string name() const override { return "mvn"; }
  std::size_t param_dim() const override { return dim_; }
  std::size_t data_dim() const override { return dim_; }
  DatasetKind kind() const override { return DatasetKind::kSingleVector; }
  std::vector<std::string> param_names() const override;
  Tensor sample_prior(RngStream& stream) const override;
  Tensor simulate(const Tensor& theta, std::size_t size,
                  RngStream& stream) const override;

  MvnPosterior posterior_oracle(const Tensor& observation) const;
  Tensor sample_oracle(const Tensor& observation, std::size_t draws,
                       RngStream& stream) const;
  const Tensor& sigma() const { return sigma_; }

 private:
  std::size_t dim_;
  Tensor sigma_;
  Tensor sigma_chol_;
  Tensor sigma_inv_;
  Tensor posterior_cov_;       // (I + Sigma^-1)^-1
  Tensor posterior_cov_chol_;
  Tensor posterior_gain_;      // Lambda Sigma^-1
};

// ---------------------------------------------------------------------------
// Gaussian mixture label model: theta is a 2-D point drawn from eight equal
// clusters placed clockwise on a circle; the observation is the one-hot
// colour label of the generating cluster. The posterior given a label is the
// uniform mixture of that label's clusters, exactly.
class GmmModel final : public SimulatorModel {
 public:
  static constexpr std::size_t kClusters = 8;
  static constexpr std::size_t kLabels = 4;  // red, green, blue, yellow

  GmmModel(double center_radius, double cluster_std);

  std::string name() const override { return "gmm"; }
  std::size_t param_dim() const override { return 2; }
  std::size_t data_dim() const override { return kLabels; }
  DatasetKind kind() const override { return DatasetKind::kSingleVector; }
  std::vector<std::string> param_names() const override;
  Tensor sample_prior(RngStream& stream) const override;
  Tensor simulate(const Tensor& theta, std::size_t size,
                  RngStream& stream) const override;
  ThetaScaler theta_scaler() const override;

  const std::vector<std::array<double, 2>>& centers() const { return centers_; }
  double cluster_std() const { return cluster_std_; }
  // Cluster indices carrying a label: {0..3}->red, {4,5}->green, {6}->blue,
  // {7}->yellow.
  static std::vector<std::size_t> label_clusters(std::size_t label);
  static const char* label_name(std::size_t label);

  struct Posterior {
    const GmmModel* model;
    std::vector<std::size_t> clusters;
    double log_density(double x, double y) const;
    Tensor sample(std::size_t draws, RngStream& stream) const;  // [draws, 2]
  };
  Posterior posterior_oracle(std::size_t label) const;
  std::size_t label_of(const Tensor& one_hot) const;

 private:
  double radius_;
  double cluster_std_;
  std::vector<std::array<double, 2>> centers_;
};

// ---------------------------------------------------------------------------
// Ricker population dynamics: latent N_{t+1} = r N_t exp(-N_t + xi_t) with
// xi_t ~ N(0, sigma^2), observed x_t ~ Pois(rho N_t). Optionally carries a
// dummy parameter u ~ U(0,1) the simulator never reads.
class RickerModel final : public SimulatorModel {
 public:
  explicit RickerModel(bool with_dummy = true);

  std::string name() const override { return "ricker"; }
  std::size_t param_dim() const override { return with_dummy_ ? 4 : 3; }
  std::size_t data_dim() const override { return 1; }
  DatasetKind kind() const override { return DatasetKind::kTimeSeries; }
  std::vector<std::string> param_names() const override;
  Tensor sample_prior(RngStream& stream) const override;
  Tensor simulate(const Tensor& theta, std::size_t size,
                  RngStream& stream) const override;
  void transform_data(Tensor& dataset) const override;  // log1p of counts
  ThetaScaler theta_scaler() const override;
  Tensor clamp_to_support(const Tensor& theta) const override;
  bool with_dummy() const { return with_dummy_; }

 private:
  bool with_dummy_;
};

// Latent expected-population path N_1..N_T (exposed for tests).
Tensor ricker_population_path(double growth_rate, double noise_std,
                              std::size_t steps, RngStream& stream);

// ---------------------------------------------------------------------------
// Stochastic SIR: binomial transitions between susceptible / infected /
// recovered compartments of a closed population.
class SirModel final : public SimulatorModel {
 public:
  static constexpr std::int64_t kPopulation = 1000;
  static constexpr std::int64_t kInitialInfected = 1;
  static constexpr double kDeltaT = 0.1;

  std::string name() const override { return "sir"; }
  std::size_t param_dim() const override { return 2; }
  std::size_t data_dim() const override { return 3; }
  DatasetKind kind() const override { return DatasetKind::kTimeSeries; }
  std::vector<std::string> param_names() const override { return {"beta", "gamma"}; }
  Tensor sample_prior(RngStream& stream) const override;
  Tensor simulate(const Tensor& theta, std::size_t size,
                  RngStream& stream) const override;
  void transform_data(Tensor& dataset) const override;  // counts / population
  ThetaScaler theta_scaler() const override;
  Tensor clamp_to_support(const Tensor& theta) const override;
};

// ---------------------------------------------------------------------------
// Lotka-Volterra predator-prey ODE, integrated with classical RK4 on a fixed
// grid; draws whose trajectories go non-finite or negative are rejected.
class LvModel final : public SimulatorModel {
 public:
  static constexpr double kPreyStart = 10.0;
  static constexpr double kPredatorStart = 5.0;
  static constexpr double kInterval = 15.0;
  static constexpr std::size_t kSteps = 500;

  std::string name() const override { return "lv"; }
  std::size_t param_dim() const override { return 4; }
  std::size_t data_dim() const override { return 2; }
  DatasetKind kind() const override { return DatasetKind::kTimeSeries; }
  std::vector<std::string> param_names() const override {
    return {"alpha", "beta", "gamma", "delta"};
  }
  Tensor sample_prior(RngStream& stream) const override;
  Tensor simulate(const Tensor& theta, std::size_t size,
                  RngStream& stream) const override;
  void transform_data(Tensor& dataset) const override;  // log1p
  ThetaScaler theta_scaler() const override;
  Tensor clamp_to_support(const Tensor& theta) const override;
};

// RK4 path of (prey, predator) from the given start; [steps, 2] sampled after
// each dt. Throws SimulationRejected on non-finite or negative values.
Tensor lv_integrate(const Tensor& theta, double prey0, double predator0,
                    std::size_t steps, double dt);

// Grid steps for an autocorrelation lag in time units (round to nearest).
std::size_t lv_lag_samples(double lag_time_units, double dt);

// The nine hand-crafted statistics of a [T, 2] predator-prey series:
// means, log variances, autocorrelations at lags 0.2 and 0.4 time units,
// and the cross-correlation. Zero-variance series yield zero correlations.
Tensor lv_handcrafted_summary(const Tensor& series);

// Factory over the model names the command surface accepts.
std::unique_ptr<SimulatorModel> make_model(const std::string& name,
                                           std::size_t mvn_dim,
                                           const std::string& mvn_cov,
                                           double gmm_center_radius,
                                           double gmm_cluster_std,
                                           bool ricker_dummy);

}  // namespace flowinfer
