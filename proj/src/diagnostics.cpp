#include "flowinfer/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "flowinfer/linalg.hpp"
#include "flowinfer/stats.hpp"

namespace flowinfer {

double nrmse(const std::vector<double>& truth, const std::vector<double>& est) {
  if (truth.size() != est.size() || truth.size() < 2) {
    throw ContractError("nrmse needs two equally long samples of size >= 2");
  }
  auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  double range = *hi - *lo;
  if (range <= 0.0) {
    throw ContractError("nrmse: true values have a degenerate range");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double d = truth[i] - est[i];
    sum += d * d / range;
  }
  return std::sqrt(sum);
}

double r_squared(const std::vector<double>& truth,
                 const std::vector<double>& est) {
  if (truth.size() != est.size() || truth.empty()) {
    throw ContractError("r_squared needs two equally long samples");
  }
  double mean = stats::mean(truth);
  double residual = 0.0, centered = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double r = truth[i] - est[i];
    double c = truth[i] - mean;
    residual += r * r;
    centered += c * c;
  }
  if (centered <= 0.0) {
    throw ContractError("r_squared: true values have zero variance");
  }
  return 1.0 - residual / centered;
}

CalibrationResult calibration_error(const std::vector<Tensor>& draws,
                                    const Tensor& truths) {
  if (truths.rank() != 2 || draws.size() != truths.extent(0) || draws.empty()) {
    throw ContractError("calibration_error: draws/truths mismatch");
  }
  std::size_t datasets = draws.size();
  std::size_t dim = truths.extent(1);
  CalibrationResult result;
  result.low_sample_warning = datasets < 50;
  result.per_parameter.resize(dim);

  // Per-dataset sorted marginals, shared across all credibility levels.
  std::vector<std::vector<std::vector<double>>> sorted(datasets);
  for (std::size_t m = 0; m < datasets; ++m) {
    const Tensor& d = draws[m];
    if (d.rank() != 2 || d.extent(1) != dim) {
      throw ContractError("calibration_error: draw matrix shape mismatch");
    }
    sorted[m].resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      std::vector<double> column(d.extent(0));
      for (std::size_t l = 0; l < d.extent(0); ++l) column[l] = d.at(l, j);
      std::sort(column.begin(), column.end());
      sorted[m][j] = std::move(column);
    }
  }
  auto sorted_quantile = [](const std::vector<double>& values, double q) {
    double pos = q * static_cast<double>(values.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
  };

  for (std::size_t j = 0; j < dim; ++j) {
    std::vector<double> deviations;
    deviations.reserve(100);
    for (std::size_t step = 0; step < 100; ++step) {
      double alpha = (static_cast<double>(step) + 0.5) / 100.0;
      double lo_q = 0.5 * (1.0 - alpha);
      double hi_q = 0.5 * (1.0 + alpha);
      std::size_t covered = 0;
      for (std::size_t m = 0; m < datasets; ++m) {
        double lo = sorted_quantile(sorted[m][j], lo_q);
        double hi = sorted_quantile(sorted[m][j], hi_q);
        double truth = truths.at(m, j);
        if (truth >= lo && truth <= hi) ++covered;
      }
      double coverage = static_cast<double>(covered) /
                        static_cast<double>(datasets);
      deviations.push_back(std::fabs(coverage - alpha));
    }
    result.per_parameter[j] = stats::median(std::move(deviations));
  }
  return result;
}

SbcResult sbc(const SimulatorModel& model, const PosteriorFn& sampler,
              std::size_t rounds, std::size_t draws, std::size_t dataset_size,
              std::size_t bins, std::uint64_t seed) {
  if (rounds == 0 || draws == 0 || bins == 0) {
    throw ContractError("sbc: rounds, draws and bins must be positive");
  }
  std::size_t dim = model.param_dim();
  SbcResult result;
  result.rounds = rounds;
  result.draws = draws;
  result.ranks.assign(dim, {});
  result.histograms.assign(dim, std::vector<std::size_t>(bins, 0));

  for (std::size_t m = 0; m < rounds; ++m) {
    RngStream prior(seed, stream_id(StreamPurpose::kValidation, m));
    RngStream post_stream(seed, stream_id(StreamPurpose::kInference, m));
    Tensor truth;
    Tensor dataset;
    for (;;) {
      truth = model.sample_prior(prior);
      try {
        dataset = model.simulate(truth, dataset_size, prior);
        break;
      } catch (const SimulationRejected&) {
        continue;
      }
    }
    Tensor posterior = sampler(dataset, draws, post_stream);
    if (posterior.rank() != 2 || posterior.extent(0) != draws ||
        posterior.extent(1) != dim) {
      throw ContractError("sbc: sampler returned a wrong-shape draw matrix");
    }
    for (std::size_t j = 0; j < dim; ++j) {
      std::size_t rank = 0;
      for (std::size_t l = 0; l < draws; ++l) {
        if (posterior.at(l, j) < truth[j]) ++rank;
      }
      result.ranks[j].push_back(rank);
      // Ranks live on 0..draws; map that range onto the bins.
      std::size_t bin = std::min(bins - 1, rank * bins / (draws + 1));
      result.histograms[j][bin]++;
    }
  }
  result.chi_square.resize(dim);
  result.p_value.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    result.chi_square[j] = stats::chi_square_uniform_stat(
        result.histograms[j], static_cast<double>(rounds));
    result.p_value[j] = stats::chi_square_sf(result.chi_square[j],
                                             static_cast<double>(bins - 1));
  }
  return result;
}

namespace {

double squared_distance(const Tensor& a, std::size_t i, const Tensor& b,
                        std::size_t j) {
  double sum = 0.0;
  for (std::size_t c = 0; c < a.extent(1); ++c) {
    double d = a.at(i, c) - b.at(j, c);
    sum += d * d;
  }
  return sum;
}

}  // namespace

double mmd(const Tensor& sample_a, const Tensor& sample_b) {
  if (sample_a.rank() != 2 || sample_b.rank() != 2 ||
      sample_a.extent(1) != sample_b.extent(1)) {
    throw ContractError("mmd expects [n, d] samples over one space");
  }
  std::size_t na = sample_a.extent(0), nb = sample_b.extent(0);
  if (na < 2 || nb < 2) throw ContractError("mmd needs at least two points");

  // Median pairwise distance over the pooled sample sets the bandwidth.
  std::vector<double> distances;
  distances.reserve((na + nb) * (na + nb - 1) / 2);
  auto row = [&](std::size_t i) -> std::pair<const Tensor*, std::size_t> {
    return i < na ? std::make_pair(&sample_a, i)
                  : std::make_pair(&sample_b, i - na);
  };
  for (std::size_t i = 0; i < na + nb; ++i) {
    auto [ti, ri] = row(i);
    for (std::size_t j = i + 1; j < na + nb; ++j) {
      auto [tj, rj] = row(j);
      distances.push_back(std::sqrt(squared_distance(*ti, ri, *tj, rj)));
    }
  }
  double bandwidth = stats::median(std::move(distances));
  if (bandwidth <= 0.0) bandwidth = 1.0;  // identical point clouds
  double gamma = 1.0 / (2.0 * bandwidth * bandwidth);

  double kaa = 0.0, kbb = 0.0, kab = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < na; ++j) {
      kaa += std::exp(-gamma * squared_distance(sample_a, i, sample_a, j));
    }
  }
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      kbb += std::exp(-gamma * squared_distance(sample_b, i, sample_b, j));
    }
  }
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      kab += std::exp(-gamma * squared_distance(sample_a, i, sample_b, j));
    }
  }
  double stat = kaa / static_cast<double>(na * na) +
                kbb / static_cast<double>(nb * nb) -
                2.0 * kab / static_cast<double>(na * nb);
  return std::sqrt(std::max(0.0, stat));
}

double resim_error(const SimulatorModel& model,
                   const std::vector<Tensor>& observed,
                   const std::vector<Tensor>& posterior_means,
                   std::uint64_t seed) {
  if (observed.size() != posterior_means.size() || observed.empty()) {
    throw ContractError("resim_error: dataset/estimate count mismatch");
  }
  std::vector<double> values;
  values.reserve(observed.size());
  for (std::size_t i = 0; i < observed.size(); ++i) {
    RngStream stream(seed, stream_id(StreamPurpose::kResimulate, i));
    // A posterior mean can land outside the prior support; project it back
    // before running the simulator.
    Tensor theta = model.clamp_to_support(posterior_means[i]);
    Tensor resim;
    try {
      resim = model.simulate(theta, observed[i].extent(0), stream);
    } catch (const SimulationRejected&) {
      continue;  // divergent re-simulation carries no usable distance
    }
    values.push_back(mmd(observed[i], resim));
  }
  if (values.empty()) throw ContractError("resim_error: no usable datasets");
  return stats::median(std::move(values));
}

double kl_gaussian_full(const Tensor& mean_p, const Tensor& cov_p,
                        const Tensor& mean_q, const Tensor& cov_q) {
  std::size_t d = mean_p.size();
  if (mean_q.size() != d || cov_p.rank() != 2 || cov_q.rank() != 2 ||
      cov_p.extent(0) != d || cov_q.extent(0) != d) {
    throw ContractError("kl_gaussian_full: dimension mismatch");
  }
  double log_det_q = linalg::spd_log_det(cov_q);
  double log_det_p = linalg::spd_log_det(cov_p);
  Tensor q_inv = linalg::spd_inverse(cov_q);
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      trace += q_inv.at(i, k) * cov_p.at(k, i);
    }
  }
  Tensor diff({d});
  for (std::size_t i = 0; i < d; ++i) diff[i] = mean_p[i] - mean_q[i];
  Tensor tmp = linalg::matvec(q_inv, diff);
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i) quad += diff[i] * tmp[i];
  return 0.5 * (log_det_q - log_det_p + trace - static_cast<double>(d) + quad);
}

double kl_gaussian_diag(const Tensor& mean_p, const Tensor& std_p,
                        const Tensor& mean_q, const Tensor& std_q) {
  std::size_t d = mean_p.size();
  if (std_p.size() != d || mean_q.size() != d || std_q.size() != d) {
    throw ContractError("kl_gaussian_diag: dimension mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    if (!(std_p[i] > 0.0) || !(std_q[i] > 0.0)) {
      throw ParameterError("kl_gaussian_diag: standard deviations must be > 0");
    }
    double var_p = std_p[i] * std_p[i];
    double dm = mean_q[i] - mean_p[i];
    sum += std::log(std_q[i] / std_p[i]) +
           (var_p + dm * dm) / (2.0 * std_q[i] * std_q[i]) - 0.5;
  }
  return sum;
}

MvnKlResult mvn_kl_validation(
    const MvnModel& model,
    const std::function<Tensor(const Tensor& observation)>& draws_fn,
    const std::vector<Tensor>& observations) {
  if (observations.empty()) {
    throw ContractError("mvn_kl_validation: no test sets");
  }
  MvnKlResult result;
  double total = 0.0;
  for (const Tensor& obs : observations) {
    Tensor draws = draws_fn(obs);
    Tensor fit_mean, fit_cov;
    linalg::mean_and_covariance(draws, fit_mean, fit_cov);
    MvnPosterior truth = model.posterior_oracle(obs);
    double kl;
    try {
      kl = kl_gaussian_full(truth.mean, truth.covariance, fit_mean, fit_cov);
    } catch (const ParameterError&) {
      // Singular sample covariance: ridge it and flag the dataset.
      for (std::size_t i = 0; i < fit_cov.extent(0); ++i) {
        fit_cov.at(i, i) += 1e-8;
      }
      result.ridge_flagged++;
      kl = kl_gaussian_full(truth.mean, truth.covariance, fit_mean, fit_cov);
    }
    total += kl;
  }
  result.mean_kl = total / static_cast<double>(observations.size());
  return result;
}

double bootstrap_stderr(
    const std::function<double(const std::vector<double>&,
                               const std::vector<double>&)>& statistic,
    const std::vector<double>& truth, const std::vector<double>& est,
    std::size_t resamples, RngStream& stream) {
  if (truth.size() != est.size() || truth.size() < 2) {
    throw ContractError("bootstrap_stderr: need paired samples of size >= 2");
  }
  std::size_t n = truth.size();
  std::vector<double> values;
  values.reserve(resamples);
  std::vector<double> bt(n), be(n);
  for (std::size_t rep = 0; rep < resamples; ++rep) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t pick = static_cast<std::size_t>(
          stream.uniform_int(0, static_cast<std::int64_t>(n) - 1));
      bt[i] = truth[pick];
      be[i] = est[pick];
    }
    try {
      values.push_back(statistic(bt, be));
    } catch (const ContractError&) {
      continue;  // degenerate resample (e.g. constant truths)
    }
  }
  if (values.size() < 2) return 0.0;
  double m = stats::mean(values);
  double sq = 0.0;
  for (double v : values) sq += (v - m) * (v - m);
  return std::sqrt(sq / static_cast<double>(values.size() - 1));
}

}  // namespace flowinfer
