// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "radloc/common.hpp"
#include "radloc/config.hpp"
#include "radloc/steering.hpp"

namespace radloc::scenario {

struct VelocityInterval {
  double min_mps = 175.0;
  double max_mps = 190.0;
};

struct TargetSpec {
  double range_m = 0.0;
  double azimuth_deg = 0.0;
  double velocity_mps = 0.0;
  double rcs_dbsm = 0.0;
};

/// Law from which target placements are drawn.
struct TargetDistribution {
  double rcs_mean_dbsm = 0.0;
  double rcs_spread_dbsm = 10.0;
  std::optional<VelocityInterval> velocity;
};

struct ClutterPatch {
  double azimuth_deg;
  int bin;
  double mean_power;
};

/// Discrete-patch clutter surrogate. Patches are grouped by range bin; the
/// patch powers of every bin sum to CNR times the noise power.
struct ClutterScene {
  std::vector<ClutterPatch> patches;
  double noise_power = 1.0;
  std::uint64_t seed = 0;
  int kappa = 0;
  int patches_per_bin = 0;

  double bin_clutter_power(int bin) const;
};

/// Per-range-bin data matrices of one target placement: Y = beta X + Z.
struct RadarReturnSet {
  std::vector<CMatrix> Y;
  std::vector<CMatrix> X;
  std::vector<CMatrix> Z;
  std::vector<int> beta;
  int target_bin = 0;

  int kappa() const { return static_cast<int>(Y.size()); }
};

ClutterScene build_clutter_scene(const RadarSiteConfig& config, int patches_per_bin,
                                 std::uint64_t seed);

TargetSpec sample_target(const RadarSiteConfig& config, double rcs_mean_dbsm,
                         double rcs_spread_dbsm, std::optional<VelocityInterval> vel_range,
                         Rng& rng);

inline TargetSpec sample_target(const RadarSiteConfig& config, const TargetDistribution& law,
                                Rng& rng) {
  return sample_target(config, law.rcs_mean_dbsm, law.rcs_spread_dbsm, law.velocity, rng);
}

/// Caches the patch steering matrices of a scene so repeated synthesis for
/// many placements only draws random amplitudes.
class ReturnSynthesizer {
 public:
  ReturnSynthesizer(const ClutterScene& scene, const RadarSiteConfig& config, int pulses,
                    int subarrays);

  RadarReturnSet synthesize(const TargetSpec& target, int realizations, double gain,
                            Rng& rng) const;

  /// Clutter-plus-noise block (dimension x K) of one bin.
  CMatrix clutter_block(int bin, int realizations, Rng& rng) const;
  /// Target block (dimension x K); each column alpha_k * steering with a
  /// uniformly random phase and |alpha_k|^2 = gain * 10^(rcs/10).
  CMatrix target_block(const TargetSpec& target, int realizations, double gain,
                       Rng& rng) const;

  /// Closed-form clutter-plus-noise covariance of one bin.
  CMatrix analytic_covariance(int bin) const;

  void check_target(const TargetSpec& target) const;

  const steering::SteeringModel& steering() const { return model_; }
  const RadarSiteConfig& config() const { return config_; }
  const ClutterScene& scene() const { return scene_; }
  int dimension() const { return model_.dimension(); }

 private:
  ClutterScene scene_;
  RadarSiteConfig config_;
  steering::SteeringModel model_;
  std::vector<CMatrix> patch_steering_;          // per bin: dimension x patches
  std::vector<Eigen::VectorXd> patch_amplitude_;  // per bin: sqrt(mean power)
};

RadarReturnSet synthesize_returns(const ClutterScene& scene, const TargetSpec& target,
                                  const RadarSiteConfig& config, int pulses, int subarrays,
                                  int realizations, double gain, Rng& rng);

struct GainCalibration {
  double gain = 1.0;
  double achieved_db = 0.0;
  int iterations = 0;
};

/// Finds the amplitude gain that makes the mean output SCNR over `trials`
/// random placements equal `target_mean_output_scnr_db`.
GainCalibration calibrate_rcs_gain(const ReturnSynthesizer& synth,
                                   double target_mean_output_scnr_db,
                                   const TargetDistribution& law, int realizations, int trials,
                                   Rng& rng);

}  // namespace radloc::scenario
