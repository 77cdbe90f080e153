// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "radloc/common.hpp"
#include "radloc/config.hpp"
#include "radloc/scenario.hpp"
#include "radloc/steering.hpp"

namespace radloc::namf {

/// Z Z^H / K.
CMatrix sample_covariance(const CMatrix& Z);

/// Cholesky factor of a Hermitian covariance. Construction rejects
/// matrices whose eigenvalue spread exceeds 1e12.
class CovarianceFactor {
 public:
  explicit CovarianceFactor(const CMatrix& sigma);

  /// L^{-1} M where sigma = L L^H, so (L^{-1}a)^H (L^{-1}b) = a^H sigma^{-1} b.
  CMatrix whiten(const CMatrix& M) const;
  CVector whiten(const CVector& v) const;
  /// Tr(M^H sigma^{-1} M).
  double quadratic_trace(const CMatrix& M) const;
  Eigen::Index dimension() const { return llt_.rows(); }

 private:
  Eigen::LLT<CMatrix> llt_;
};

/// NAMF evaluation for one range bin with the whitened data cached, so each
/// additional steering direction costs one triangular solve.
class NamfBin {
 public:
  NamfBin(const CMatrix& Y, const CMatrix& sigma);
  NamfBin(const CMatrix& Y, CovarianceFactor factor);

  double statistic(const CVector& steering) const;
  const CovarianceFactor& factor() const { return factor_; }
  const CMatrix& whitened_data() const { return whitened_y_; }
  double diag_norm() const { return diag_norm_; }

 private:
  void prepare(const CMatrix& Y);

  CovarianceFactor factor_;
  CMatrix whitened_y_;
  double diag_norm_ = 0.0;
};

/// |a^H S^-1 Y|^2 / ((a^H S^-1 a) * ||diag(Y^H S^-1 Y)||_2).
double namf_statistic(const CMatrix& Y, const CMatrix& sigma, const CVector& steering);

struct VelocityAxis {
  double v_min_mps = 175.0;
  double dv_mps = 0.5;
  int n_velocity = 31;
};

/// Sampling grid of a heatmap. Azimuth samples sit at theta_min + j*dtheta,
/// range samples at bin midpoints r_min + i*dr.
struct HeatmapGrid {
  double r_min_m = 14553.0;
  double dr_m = 30.0;
  int kappa = 5;
  double theta_min_deg = 20.0;
  double dtheta_deg = 0.4;
  int n_azimuth = 26;
  std::optional<VelocityAxis> velocity;

  /// Grid over the site's region; `n = floor(extent / step) + 1` per axis.
  static HeatmapGrid from_site(const RadarSiteConfig& site, double dtheta_deg,
                               std::optional<scenario::VelocityInterval> vel = std::nullopt,
                               double dv_mps = 0.5);

  int n_velocity() const { return velocity ? velocity->n_velocity : 1; }
  bool doppler() const { return velocity.has_value(); }
  std::vector<std::size_t> shape() const;
  std::size_t size() const {
    return static_cast<std::size_t>(kappa) * n_azimuth * n_velocity();
  }
  std::size_t index(int bin, int az, int vel = 0) const {
    return (static_cast<std::size_t>(bin) * n_azimuth + az) * n_velocity() + vel;
  }
  double range_at(int bin) const { return r_min_m + bin * dr_m; }
  double theta_at(int j) const { return theta_min_deg + j * dtheta_deg; }
  double velocity_at(int k) const {
    return velocity ? velocity->v_min_mps + k * velocity->dv_mps : 0.0;
  }
  double theta_max_deg() const { return theta_at(n_azimuth - 1); }
  double v_max_mps() const { return velocity_at(n_velocity() - 1); }
  /// Outer range extent (bin edges).
  double range_lo_m() const { return r_min_m - 0.5 * dr_m; }
  double range_hi_m() const { return r_min_m + (kappa - 0.5) * dr_m; }
};

struct Label {
  double range_m = 0.0;
  double azimuth_deg = 0.0;
  std::optional<double> velocity_mps;
};

struct HeatmapSample {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  Label label;
  ScenarioId scenario = ScenarioId::O;
  double mean_output_scnr_db = 0.0;
  std::uint64_t seed = 0;
};

/// Steering vectors for every (azimuth, velocity) grid point, stored as
/// matrix columns in grid order (azimuth-major).
class SteeringTable {
 public:
  SteeringTable(const steering::SteeringModel& model, const HeatmapGrid& grid);
  const CMatrix& matrix() const { return table_; }

 private:
  CMatrix table_;
};

/// NAMF heatmap over the grid; covariance per bin is that bin's sample
/// covariance of Z.
HeatmapSample heatmap(const scenario::RadarReturnSet& returns, const HeatmapGrid& grid,
                      const SteeringTable& table);

/// 10 log10(Tr(X^H S^-1 X) / Tr(Z^H S^-1 Z)).
double output_scnr(const CMatrix& X, const CMatrix& Z, const CMatrix& sigma);
double output_scnr(const CMatrix& X, const CMatrix& Z, const CovarianceFactor& factor);

/// Asymptotic breakdown threshold 10 log10(sqrt(pulses * L / K)) in dB.
double breakdown_threshold(int pulses, int subarrays, int realizations);

}  // namespace radloc::namf
