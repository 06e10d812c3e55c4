#include "flowinfer/simulators.hpp"

#include <algorithm>
#include <cmath>

#include "flowinfer/errors.hpp"
#include "flowinfer/linalg.hpp"

namespace flowinfer {

namespace {

constexpr double kLogVarFloor = 1e-12;

double uniform_mean(double lo, double hi) { return 0.5 * (lo + hi); }
double uniform_std(double lo, double hi) {
  return (hi - lo) / std::sqrt(12.0);
}

double clamp_val(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

}  // namespace

ThetaScaler ThetaScaler::identity(std::size_t dim) {
  ThetaScaler s;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 1.0);
  return s;
}

Tensor ThetaScaler::to_latent(const Tensor& theta_rows) const {
  Tensor out = theta_rows;
  std::size_t d = mean.size();
  std::size_t rows = out.size() / d;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out[i * d + j] = (out[i * d + j] - mean[j]) / scale[j];
    }
  }
  return out;
}

Tensor ThetaScaler::from_latent(const Tensor& latent_rows) const {
  Tensor out = latent_rows;
  std::size_t d = mean.size();
  std::size_t rows = out.size() / d;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out[i * d + j] = out[i * d + j] * scale[j] + mean[j];
    }
  }
  return out;
}

double ThetaScaler::log_jacobian() const {
  double sum = 0.0;
  for (double s : scale) sum -= std::log(s);
  return sum;
}

// ---------------------------------------------------------------------------

MvnModel::MvnModel(Tensor sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rank() != 2 || sigma_.extent(0) != sigma_.extent(1)) {
    throw ParameterError("mvn: covariance must be square");
  }
  dim_ = sigma_.extent(0);
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::fabs(sigma_.at(i, j) - sigma_.at(j, i)) > 1e-12) {
        throw ParameterError("mvn: covariance must be symmetric");
      }
    }
  }
  sigma_chol_ = linalg::cholesky(sigma_);  // throws if not PD
  sigma_inv_ = linalg::spd_inverse(sigma_);
  Tensor precision = sigma_inv_;
  for (std::size_t i = 0; i < dim_; ++i) precision.at(i, i) += 1.0;
  posterior_cov_ = linalg::spd_inverse(precision);
  posterior_cov_chol_ = linalg::cholesky(posterior_cov_);
  posterior_gain_ = linalg::matmat(posterior_cov_, sigma_inv_);
}

Tensor MvnModel::kms_covariance(std::size_t dim, double rho) {
  Tensor sigma({dim, dim});
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      sigma.at(i, j) = std::pow(rho, std::fabs(static_cast<double>(i) -
                                               static_cast<double>(j)));
    }
  }
  return sigma;
}

std::vector<std::string> MvnModel::param_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < dim_; ++i) {
    names.push_back("mu_" + std::to_string(i + 1));
  }
  return names;
}

Tensor MvnModel::sample_prior(RngStream& stream) const {
  return sample_gaussian(stream, {dim_});
}

Tensor MvnModel::simulate(const Tensor& theta, std::size_t size,
                          RngStream& stream) const {
  if (size != 1) {
    throw ContractError("mvn produces a single observation per dataset");
  }
  if (theta.size() != dim_) throw ContractError("mvn: wrong theta size");
  Tensor noise = sample_gaussian(stream, {dim_});
  Tensor out({1, dim_});
  for (std::size_t i = 0; i < dim_; ++i) {
    double v = theta[i];
    for (std::size_t j = 0; j <= i; ++j) v += sigma_chol_.at(i, j) * noise[j];
    out.at(0, i) = v;
  }
  return out;
}

MvnPosterior MvnModel::posterior_oracle(const Tensor& observation) const {
  if (observation.size() != dim_) {
    throw ContractError("mvn oracle: observation size mismatch");
  }
  Tensor x = observation.reshaped({dim_});
  return {linalg::matvec(posterior_gain_, x), posterior_cov_};
}

Tensor MvnModel::sample_oracle(const Tensor& observation, std::size_t draws,
                               RngStream& stream) const {
  MvnPosterior post = posterior_oracle(observation);
  Tensor out({draws, dim_});
  for (std::size_t l = 0; l < draws; ++l) {
    Tensor noise = sample_gaussian(stream, {dim_});
    for (std::size_t i = 0; i < dim_; ++i) {
      double v = post.mean[i];
      for (std::size_t j = 0; j <= i; ++j) {
        v += posterior_cov_chol_.at(i, j) * noise[j];
      }
      out.at(l, i) = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

GmmModel::GmmModel(double center_radius, double cluster_std)
    : radius_(center_radius), cluster_std_(cluster_std) {
  if (!(center_radius > 0.0) || !(cluster_std > 0.0)) {
    throw ParameterError("gmm: radius and cluster std must be positive");
  }
  for (std::size_t k = 0; k < kClusters; ++k) {
    // Clockwise from angle zero.
    double angle = -2.0 * M_PI * static_cast<double>(k) /
                   static_cast<double>(kClusters);
    centers_.push_back({radius_ * std::cos(angle), radius_ * std::sin(angle)});
  }
}

std::vector<std::string> GmmModel::param_names() const {
  return {"theta_1", "theta_2"};
}

std::vector<std::size_t> GmmModel::label_clusters(std::size_t label) {
  switch (label) {
    case 0: return {0, 1, 2, 3};  // red
    case 1: return {4, 5};        // green
    case 2: return {6};           // blue
    case 3: return {7};           // yellow
    default: throw ContractError("gmm: label index out of range");
  }
}

const char* GmmModel::label_name(std::size_t label) {
  static const char* names[] = {"red", "green", "blue", "yellow"};
  if (label >= kLabels) throw ContractError("gmm: label index out of range");
  return names[label];
}

Tensor GmmModel::sample_prior(RngStream& stream) const {
  std::size_t k = static_cast<std::size_t>(stream.uniform_int(0, kClusters - 1));
  Tensor theta({2});
  theta[0] = centers_[k][0] + stream.gaussian(0.0, cluster_std_);
  theta[1] = centers_[k][1] + stream.gaussian(0.0, cluster_std_);
  return theta;
}

Tensor GmmModel::simulate(const Tensor& theta, std::size_t size,
                          RngStream& stream) const {
  if (size != 1) throw ContractError("gmm produces a single label per dataset");
  if (theta.size() != 2) throw ContractError("gmm: theta must be 2-d");
  // Cluster responsibilities given the point, then a categorical draw.
  std::array<double, kClusters> resp;
  double norm = 0.0;
  double inv2var = 1.0 / (2.0 * cluster_std_ * cluster_std_);
  for (std::size_t k = 0; k < kClusters; ++k) {
    double dx = theta[0] - centers_[k][0];
    double dy = theta[1] - centers_[k][1];
    resp[k] = std::exp(-(dx * dx + dy * dy) * inv2var);
    norm += resp[k];
  }
  double u = stream.uniform01() * norm;
  std::size_t cluster = kClusters - 1;
  double cum = 0.0;
  for (std::size_t k = 0; k < kClusters; ++k) {
    cum += resp[k];
    if (u < cum) {
      cluster = k;
      break;
    }
  }
  std::size_t label = cluster < 4 ? 0 : cluster < 6 ? 1 : cluster < 7 ? 2 : 3;
  Tensor out({1, kLabels});
  out.at(0, label) = 1.0;
  return out;
}

ThetaScaler GmmModel::theta_scaler() const {
  // Marginal std of the prior mixture per coordinate.
  double sd = std::sqrt(0.5 * radius_ * radius_ + cluster_std_ * cluster_std_);
  ThetaScaler s;
  s.mean = {0.0, 0.0};
  s.scale = {sd, sd};
  return s;
}

double GmmModel::Posterior::log_density(double x, double y) const {
  double inv2var = 1.0 / (2.0 * model->cluster_std_ * model->cluster_std_);
  double log_norm = -std::log(2.0 * M_PI * model->cluster_std_ *
                              model->cluster_std_);
  double acc = 0.0;
  for (std::size_t k : clusters) {
    double dx = x - model->centers_[k][0];
    double dy = y - model->centers_[k][1];
    acc += std::exp(log_norm - (dx * dx + dy * dy) * inv2var);
  }
  return std::log(acc / static_cast<double>(clusters.size()));
}

Tensor GmmModel::Posterior::sample(std::size_t draws, RngStream& stream) const {
  Tensor out({draws, 2});
  for (std::size_t l = 0; l < draws; ++l) {
    std::size_t k = clusters[static_cast<std::size_t>(
        stream.uniform_int(0, clusters.size() - 1))];
    out.at(l, 0) = model->centers_[k][0] + stream.gaussian(0.0, model->cluster_std_);
    out.at(l, 1) = model->centers_[k][1] + stream.gaussian(0.0, model->cluster_std_);
  }
  return out;
}

GmmModel::Posterior GmmModel::posterior_oracle(std::size_t label) const {
  return Posterior{this, label_clusters(label)};
}

std::size_t GmmModel::label_of(const Tensor& one_hot) const {
  if (one_hot.size() != kLabels) {
    throw ContractError("gmm: expected a one-hot 4-vector");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < kLabels; ++i) {
    if (one_hot[i] > one_hot[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kRickerRhoLo = 0.0, kRickerRhoHi = 15.0;
constexpr double kRickerRLo = 1.0, kRickerRHi = 90.0;
constexpr double kRickerSigmaLo = 0.05, kRickerSigmaHi = 0.7;
}  // namespace

RickerModel::RickerModel(bool with_dummy) : with_dummy_(with_dummy) {}

std::vector<std::string> RickerModel::param_names() const {
  std::vector<std::string> names = {"rho", "r", "sigma"};
  if (with_dummy_) names.push_back("u");
  return names;
}

Tensor RickerModel::sample_prior(RngStream& stream) const {
  Tensor theta({param_dim()});
  theta[0] = stream.uniform(kRickerRhoLo, kRickerRhoHi);
  theta[1] = stream.uniform(kRickerRLo, kRickerRHi);
  theta[2] = stream.uniform(kRickerSigmaLo, kRickerSigmaHi);
  if (with_dummy_) theta[3] = stream.uniform(0.0, 1.0);
  return theta;
}

Tensor RickerModel::simulate(const Tensor& theta, std::size_t size,
                             RngStream& stream) const {
  if (theta.size() != param_dim()) throw ContractError("ricker: theta size");
  double rho = theta[0];
  double growth = theta[1];
  double noise = theta[2];
  if (rho < 0.0 || noise < 0.0) {
    throw ParameterError("ricker: rho and sigma must be non-negative");
  }
  // The dummy component is never read.
  Tensor out({size, 1});
  double population = 1.0;
  for (std::size_t t = 0; t < size; ++t) {
    out.at(t, 0) = static_cast<double>(stream.poisson(rho * population));
    double shock = stream.gaussian(0.0, noise);
    population = growth * population * std::exp(-population + shock);
  }
  return out;
}

void RickerModel::transform_data(Tensor& dataset) const {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    dataset[i] = std::log1p(dataset[i]);
  }
}

ThetaScaler RickerModel::theta_scaler() const {
  ThetaScaler s;
  s.mean = {uniform_mean(kRickerRhoLo, kRickerRhoHi),
            uniform_mean(kRickerRLo, kRickerRHi),
            uniform_mean(kRickerSigmaLo, kRickerSigmaHi)};
  s.scale = {uniform_std(kRickerRhoLo, kRickerRhoHi),
             uniform_std(kRickerRLo, kRickerRHi),
             uniform_std(kRickerSigmaLo, kRickerSigmaHi)};
  if (with_dummy_) {
    s.mean.push_back(0.5);
    s.scale.push_back(uniform_std(0.0, 1.0));
  }
  return s;
}

Tensor RickerModel::clamp_to_support(const Tensor& theta) const {
  Tensor out = theta;
  out[0] = clamp_val(out[0], kRickerRhoLo, kRickerRhoHi);
  out[1] = clamp_val(out[1], kRickerRLo, kRickerRHi);
  out[2] = clamp_val(out[2], kRickerSigmaLo, kRickerSigmaHi);
  if (with_dummy_) out[3] = clamp_val(out[3], 0.0, 1.0);
  return out;
}

Tensor ricker_population_path(double growth_rate, double noise_std,
                              std::size_t steps, RngStream& stream) {
  Tensor path({steps});
  double population = 1.0;
  for (std::size_t t = 0; t < steps; ++t) {
    path[t] = population;
    double shock = stream.gaussian(0.0, noise_std);
    population = growth_rate * population * std::exp(-population + shock);
  }
  return path;
}

// ---------------------------------------------------------------------------

Tensor SirModel::sample_prior(RngStream& stream) const {
  Tensor theta({2});
  theta[0] = stream.uniform(0.01, 1.0);
  theta[1] = stream.uniform(0.01, theta[0]);
  return theta;
}

Tensor SirModel::simulate(const Tensor& theta, std::size_t size,
                          RngStream& stream) const {
  if (theta.size() != 2) throw ContractError("sir: theta must be 2-d");
  double beta = theta[0];
  double gamma = theta[1];
  if (beta < 0.0 || gamma < 0.0) {
    throw ParameterError("sir: rates must be non-negative");
  }
  std::int64_t susceptible = kPopulation - kInitialInfected;
  std::int64_t infected = kInitialInfected;
  std::int64_t recovered = 0;
  double recover_p = -std::expm1(-gamma * kDeltaT);
  Tensor out({size, 3});
  for (std::size_t t = 0; t < size; ++t) {
    double infect_p = -std::expm1(-beta * static_cast<double>(infected) /
                                  static_cast<double>(kPopulation) * kDeltaT);
    std::int64_t new_infected = stream.binomial(susceptible, infect_p);
    std::int64_t new_recovered = stream.binomial(infected, recover_p);
    susceptible -= new_infected;
    infected += new_infected - new_recovered;
    recovered += new_recovered;
    out.at(t, 0) = static_cast<double>(susceptible);
    out.at(t, 1) = static_cast<double>(infected);
    out.at(t, 2) = static_cast<double>(recovered);
  }
  return out;
}

void SirModel::transform_data(Tensor& dataset) const {
  double inv = 1.0 / static_cast<double>(kPopulation);
  for (std::size_t i = 0; i < dataset.size(); ++i) dataset[i] *= inv;
}

ThetaScaler SirModel::theta_scaler() const {
  // gamma | beta ~ U(0.01, beta) with beta ~ U(0.01, 1); closed-form marginal
  // moments via the laws of total expectation and variance.
  ThetaScaler s;
  double beta_mean = uniform_mean(0.01, 1.0);
  double beta_var = uniform_std(0.01, 1.0) * uniform_std(0.01, 1.0);
  double gamma_mean = 0.5 * (0.01 + beta_mean);
  double e_sq = beta_var + (beta_mean - 0.01) * (beta_mean - 0.01);
  double gamma_var = e_sq / 12.0 + beta_var / 4.0;
  s.mean = {beta_mean, gamma_mean};
  s.scale = {std::sqrt(beta_var), std::sqrt(gamma_var)};
  return s;
}

Tensor SirModel::clamp_to_support(const Tensor& theta) const {
  Tensor out = theta;
  out[0] = clamp_val(out[0], 0.01, 1.0);
  out[1] = clamp_val(out[1], 0.01, std::max(0.01, out[0]));
  return out;
}

// ---------------------------------------------------------------------------

namespace {
const double kLvLo = std::exp(-2.0);
const double kLvHi = std::exp(2.0);
constexpr double kLvDivergenceCap = 1e12;
}  // namespace

Tensor LvModel::sample_prior(RngStream& stream) const {
  Tensor theta({4});
  for (std::size_t i = 0; i < 4; ++i) theta[i] = stream.uniform(kLvLo, kLvHi);
  return theta;
}

Tensor LvModel::simulate(const Tensor& theta, std::size_t size,
                         RngStream& stream) const {
  (void)stream;  // the forward model is a deterministic ODE of theta
  if (theta.size() != 4) throw ContractError("lv: theta must be 4-d");
  return lv_integrate(theta, kPreyStart, kPredatorStart, size,
                      kInterval / static_cast<double>(kSteps));
}

void LvModel::transform_data(Tensor& dataset) const {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    dataset[i] = std::log1p(dataset[i]);
  }
}

ThetaScaler LvModel::theta_scaler() const {
  ThetaScaler s;
  s.mean.assign(4, uniform_mean(kLvLo, kLvHi));
  s.scale.assign(4, uniform_std(kLvLo, kLvHi));
  return s;
}

Tensor LvModel::clamp_to_support(const Tensor& theta) const {
  Tensor out = theta;
  for (std::size_t i = 0; i < 4; ++i) out[i] = clamp_val(out[i], kLvLo, kLvHi);
  return out;
}

Tensor lv_integrate(const Tensor& theta, double prey0, double predator0,
                    std::size_t steps, double dt) {
  double alpha = theta[0], beta = theta[1], gamma = theta[2], delta = theta[3];
  auto prey_rate = [&](double u, double v) { return alpha * u - beta * u * v; };
  auto predator_rate = [&](double u, double v) {
    return -gamma * v + delta * beta * u * v;
  };
  Tensor out({steps, 2});
  double u = prey0, v = predator0;
  for (std::size_t t = 0; t < steps; ++t) {
    double k1u = prey_rate(u, v), k1v = predator_rate(u, v);
    double k2u = prey_rate(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v);
    double k2v = predator_rate(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v);
    double k3u = prey_rate(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v);
    double k3v = predator_rate(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v);
    double k4u = prey_rate(u + dt * k3u, v + dt * k3v);
    double k4v = predator_rate(u + dt * k3u, v + dt * k3v);
    u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!std::isfinite(u) || !std::isfinite(v) || u < 0.0 || v < 0.0 ||
        std::fabs(u) > kLvDivergenceCap || std::fabs(v) > kLvDivergenceCap) {
      throw SimulationRejected{};
    }
    out.at(t, 0) = u;
    out.at(t, 1) = v;
  }
  return out;
}

std::size_t lv_lag_samples(double lag_time_units, double dt) {
  return static_cast<std::size_t>(std::lround(lag_time_units / dt));
}

namespace {

double autocorrelation(const double* x, std::size_t n, std::size_t stride,
                       std::size_t lag) {
  double mean = 0.0;
  for (std::size_t t = 0; t < n; ++t) mean += x[t * stride];
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double d = x[t * stride] - mean;
    denom += d * d;
  }
  if (denom <= 0.0 || lag >= n) return 0.0;
  double num = 0.0;
  for (std::size_t t = 0; t + lag < n; ++t) {
    num += (x[t * stride] - mean) * (x[(t + lag) * stride] - mean);
  }
  return num / denom;
}

}  // namespace

Tensor lv_handcrafted_summary(const Tensor& series) {
  if (series.rank() != 2 || series.extent(1) != 2 || series.extent(0) < 2) {
    throw ContractError("lv summary expects a [T, 2] series with T >= 2");
  }
  std::size_t n = series.extent(0);
  const double* prey = series.data();
  const double* predator = series.data() + 1;
  double dt = LvModel::kInterval / static_cast<double>(LvModel::kSteps);
  std::size_t lag_short = lv_lag_samples(0.2, dt);
  std::size_t lag_long = lv_lag_samples(0.4, dt);

  double mean_u = 0.0, mean_v = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mean_u += prey[2 * t];
    mean_v += predator[2 * t];
  }
  mean_u /= static_cast<double>(n);
  mean_v /= static_cast<double>(n);
  double var_u = 0.0, var_v = 0.0, cross = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    double du = prey[2 * t] - mean_u;
    double dv = predator[2 * t] - mean_v;
    var_u += du * du;
    var_v += dv * dv;
    cross += du * dv;
  }
  double crosscorr =
      (var_u > 0.0 && var_v > 0.0) ? cross / std::sqrt(var_u * var_v) : 0.0;
  var_u /= static_cast<double>(n);
  var_v /= static_cast<double>(n);

  Tensor out({9});
  out[0] = mean_u;
  out[1] = mean_v;
  out[2] = std::log(var_u + kLogVarFloor);
  out[3] = std::log(var_v + kLogVarFloor);
  out[4] = autocorrelation(prey, n, 2, lag_short);
  out[5] = autocorrelation(prey, n, 2, lag_long);
  out[6] = autocorrelation(predator, n, 2, lag_short);
  out[7] = autocorrelation(predator, n, 2, lag_long);
  out[8] = crosscorr;
  return out;
}

// ---------------------------------------------------------------------------

std::unique_ptr<SimulatorModel> make_model(const std::string& name,
                                           std::size_t mvn_dim,
                                           const std::string& mvn_cov,
                                           double gmm_center_radius,
                                           double gmm_cluster_std,
                                           bool ricker_dummy) {
  if (name == "mvn") {
    Tensor sigma = mvn_cov == "identity" ? Tensor::identity(mvn_dim)
                                         : MvnModel::kms_covariance(mvn_dim);
    return std::make_unique<MvnModel>(std::move(sigma));
  }
  if (name == "gmm") {
    return std::make_unique<GmmModel>(gmm_center_radius, gmm_cluster_std);
  }
  if (name == "ricker") return std::make_unique<RickerModel>(ricker_dummy);
  if (name == "sir") return std::make_unique<SirModel>();
  if (name == "lv" || name == "lv_handcrafted") {
    return std::make_unique<LvModel>();
  }
  throw ConfigError("unknown model '" + name + "'");
}

}  // namespace flowinfer
