// SPDX-License-Identifier: Apache-2.0
#include "radloc/scenario.hpp"

#include <cmath>
#include <numeric>

#include "radloc/namf.hpp"

namespace radloc::scenario {

double ClutterScene::bin_clutter_power(int bin) const {
  double acc = 0.0;
  for (const auto& p : patches) {
    if (p.bin == bin) acc += p.mean_power;
  }
  return acc;
}

ClutterScene build_clutter_scene(const RadarSiteConfig& config, int patches_per_bin,
                                 std::uint64_t seed) {
  if (patches_per_bin <= 0) fail(ErrorCode::kInvalidArgument, "empty clutter scene");
  config.validate();

  ClutterScene scene;
  scene.noise_power = 1.0;
  scene.seed = seed;
  scene.kappa = config.kappa;
  scene.patches_per_bin = patches_per_bin;
  scene.patches.reserve(static_cast<std::size_t>(patches_per_bin) * config.kappa);

  Rng rng(seed);
  std::uniform_real_distribution<double> az(config.theta_min_deg, config.theta_max_deg);
  std::exponential_distribution<double> power(1.0);
  const double cnr = std::pow(10.0, config.cnr_db / 10.0);
  for (int bin = 0; bin < config.kappa; ++bin) {
    const std::size_t first = scene.patches.size();
    double total = 0.0;
    for (int p = 0; p < patches_per_bin; ++p) {
      const double a = az(rng);
      // Exponential draws can underflow to zero only with negligible
      // probability; floor them so every patch stays strictly positive.
      const double w = std::max(power(rng), 1e-12);
      scene.patches.push_back({a, bin, w});
      total += w;
    }
    const double scale = cnr * scene.noise_power / total;
    for (std::size_t i = first; i < scene.patches.size(); ++i) scene.patches[i].mean_power *= scale;
  }
  return scene;
}

TargetSpec sample_target(const RadarSiteConfig& config, double rcs_mean_dbsm,
                         double rcs_spread_dbsm, std::optional<VelocityInterval> vel_range,
                         Rng& rng) {
  if (config.kappa > 1 && config.r_max_m <= config.r_min_m) {
    fail(ErrorCode::kInvalidArgument, "degenerate processing region");
  }
  config.validate();
  require(rcs_spread_dbsm >= 0.0 && std::isfinite(rcs_mean_dbsm), "invalid RCS law");
  if (vel_range) require(vel_range->max_mps >= vel_range->min_mps, "invalid velocity interval");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TargetSpec t;
  t.range_m = config.range_lo_m() + unit(rng) * (config.range_hi_m() - config.range_lo_m());
  t.azimuth_deg =
      config.theta_min_deg + unit(rng) * (config.theta_max_deg - config.theta_min_deg);
  t.rcs_dbsm = rcs_mean_dbsm + (unit(rng) - 0.5) * rcs_spread_dbsm;
  t.velocity_mps =
      vel_range ? vel_range->min_mps + unit(rng) * (vel_range->max_mps - vel_range->min_mps)
                : 0.0;
  return t;
}

ReturnSynthesizer::ReturnSynthesizer(const ClutterScene& scene, const RadarSiteConfig& config,
                                     int pulses, int subarrays)
    : scene_(scene), config_(config), model_(config, pulses, subarrays) {
  config_.validate();
  require(scene.kappa == config.kappa, "scene and configuration disagree on range-bin count");
  patch_steering_.resize(config.kappa);
  patch_amplitude_.resize(config.kappa);
  for (int bin = 0; bin < config.kappa; ++bin) {
    std::vector<const ClutterPatch*> in_bin;
    for (const auto& p : scene.patches) {
      if (p.bin == bin) in_bin.push_back(&p);
    }
    if (in_bin.empty()) fail(ErrorCode::kInvalidArgument, "empty clutter scene");
    CMatrix A(model_.dimension(), static_cast<Eigen::Index>(in_bin.size()));
    Eigen::VectorXd amp(static_cast<Eigen::Index>(in_bin.size()));
    for (std::size_t i = 0; i < in_bin.size(); ++i) {
      // Clutter is stationary: zero Doppler.
      A.col(static_cast<Eigen::Index>(i)) = model_.steer(in_bin[i]->azimuth_deg, 0.0);
      amp[static_cast<Eigen::Index>(i)] = std::sqrt(in_bin[i]->mean_power);
    }
    patch_steering_[bin] = std::move(A);
    patch_amplitude_[bin] = std::move(amp);
  }
}

namespace {

// Fills M with circularly-symmetric complex Gaussian entries of unit variance.
void fill_complex_gaussian(CMatrix& M, Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  for (Eigen::Index c = 0; c < M.cols(); ++c) {
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      const double re = n(rng);
      const double im = n(rng);
      M(r, c) = cdouble(re, im);
    }
  }
}

}  // namespace

CMatrix ReturnSynthesizer::clutter_block(int bin, int realizations, Rng& rng) const {
  require(bin >= 0 && bin < config_.kappa, "range bin out of bounds");
  require(realizations >= 1, "need at least one realization");
  const CMatrix& A = patch_steering_[bin];
  CMatrix gamma(A.cols(), realizations);
  fill_complex_gaussian(gamma, rng);
  CMatrix noise(A.rows(), realizations);
  fill_complex_gaussian(noise, rng);
  return A * (patch_amplitude_[bin].asDiagonal() * gamma) + std::sqrt(scene_.noise_power) * noise;
}

CMatrix ReturnSynthesizer::target_block(const TargetSpec& target, int realizations, double gain,
                                        Rng& rng) const {
  require(gain >= 0.0 && std::isfinite(gain), "gain must be non-negative");
  const CVector a = model_.steer(target.azimuth_deg, target.velocity_mps);
  const double amp = std::sqrt(gain * std::pow(10.0, target.rcs_dbsm / 10.0));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  CMatrix X(a.size(), realizations);
  for (int k = 0; k < realizations; ++k) X.col(k) = std::polar(amp, phase(rng)) * a;
  return X;
}

CMatrix ReturnSynthesizer::analytic_covariance(int bin) const {
  require(bin >= 0 && bin < config_.kappa, "range bin out of bounds");
  const CMatrix& A = patch_steering_[bin];
  const Eigen::VectorXd pw = patch_amplitude_[bin].array().square();
  CMatrix S = A * pw.asDiagonal() * A.adjoint();
  S.diagonal().array() += scene_.noise_power;
  return S;
}

void ReturnSynthesizer::check_target(const TargetSpec& target) const {
  const bool inside = target.range_m >= config_.range_lo_m() &&
                      target.range_m <= config_.range_hi_m() &&
                      target.azimuth_deg >= config_.theta_min_deg &&
                      target.azimuth_deg <= config_.theta_max_deg;
  if (!inside) fail(ErrorCode::kInvalidArgument, "target outside processing region");
}

RadarReturnSet ReturnSynthesizer::synthesize(const TargetSpec& target, int realizations,
                                             double gain, Rng& rng) const {
  require(realizations >= 1, "need at least one realization");
  check_target(target);
  RadarReturnSet out;
  out.target_bin = config_.bin_of(target.range_m);
  out.Y.resize(config_.kappa);
  out.X.resize(config_.kappa);
  out.Z.resize(config_.kappa);
  out.beta.assign(config_.kappa, 0);
  for (int bin = 0; bin < config_.kappa; ++bin) out.Z[bin] = clutter_block(bin, realizations, rng);
  const CMatrix X = target_block(target, realizations, gain, rng);
  for (int bin = 0; bin < config_.kappa; ++bin) {
    if (bin == out.target_bin) {
      out.beta[bin] = 1;
      out.X[bin] = X;
      out.Y[bin] = X + out.Z[bin];
    } else {
      out.X[bin] = CMatrix::Zero(X.rows(), X.cols());
      out.Y[bin] = out.Z[bin];
    }
  }
  return out;
}

RadarReturnSet synthesize_returns(const ClutterScene& scene, const TargetSpec& target,
                                  const RadarSiteConfig& config, int pulses, int subarrays,
                                  int realizations, double gain, Rng& rng) {
  return ReturnSynthesizer(scene, config, pulses, subarrays)
      .synthesize(target, realizations, gain, rng);
}

GainCalibration calibrate_rcs_gain(const ReturnSynthesizer& synth,
                                   double target_mean_output_scnr_db,
                                   const TargetDistribution& law, int realizations, int trials,
                                   Rng& rng) {
  require(trials >= 100, "calibration needs at least 100 trials");
  require(std::isfinite(target_mean_output_scnr_db), "target SCNR must be finite");

  // Unit-gain traces per placement; the numerator trace is linear in gain.
  std::vector<double> num(trials), den(trials);
  for (int t = 0; t < trials; ++t) {
    const TargetSpec target = sample_target(synth.config(), law, rng);
    const int bin = synth.config().bin_of(target.range_m);
    const CMatrix Z = synth.clutter_block(bin, realizations, rng);
    const CMatrix X = synth.target_block(target, realizations, 1.0, rng);
    const namf::CovarianceFactor factor(namf::sample_covariance(Z));
    num[t] = factor.quadratic_trace(X);
    den[t] = factor.quadratic_trace(Z);
  }
  auto mean_scnr = [&](double gain_db) {
    const double g = std::pow(10.0, gain_db / 10.0);
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) acc += 10.0 * std::log10(g * num[t] / den[t]);
    return acc / trials;
  };

  double lo = -300.0, hi = 300.0;
  GainCalibration out;
  for (out.iterations = 1; out.iterations <= 200; ++out.iterations) {
    const double mid = 0.5 * (lo + hi);
    if (mean_scnr(mid) < target_mean_output_scnr_db) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-9) break;
  }
  const double gain_db = 0.5 * (lo + hi);
  out.gain = std::pow(10.0, gain_db / 10.0);
  out.achieved_db = mean_scnr(gain_db);
  if (!(std::abs(out.achieved_db - target_mean_output_scnr_db) <= 0.5)) {
    fail(ErrorCode::kNumerical, "gain calibration did not converge: achieved " +
                                    std::to_string(out.achieved_db) + " dB");
  }
  return out;
}

}  // namespace radloc::scenario
