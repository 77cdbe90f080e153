// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "radloc/common.hpp"
#include "radloc/config.hpp"

namespace radloc::steering {

/// Uniform rectangular receive array.
struct ArrayGeometry {
  int n_horizontal = 48;
  int n_vertical = 5;
  double spacing_m = 0.015;
  double wavelength_m = 0.03;

  static ArrayGeometry from_site(const RadarSiteConfig& site);
};

/// Spatial steering vector of the array condensed to `L` subarrays of
/// (n_horizontal / L) x n_vertical elements each. Every subarray is combined
/// with uniform weights and the result renormalized to unit modulus; phases
/// are referenced to the array center.
CVector condensed_spatial_steering(const ArrayGeometry& geom, int L, double theta_deg,
                                   double phi_deg = 0.0);

/// Doppler phase progression across `pulses` pulses for radial speed `v_mps`
/// (two-way Doppler f_d = 2 v f_c / c). Phases wrap; ambiguity is accepted.
CVector doppler_vector(double v_mps, int pulses, double prf_hz, double carrier_hz);

/// Kronecker product d (x) a: entry (m * L + l) = d[m] * a[l].
CVector space_time_steering(const CVector& a, const CVector& d);

/// Bundles what is needed to evaluate space-time steering vectors for one
/// processing configuration.
class SteeringModel {
 public:
  SteeringModel(const RadarSiteConfig& site, int pulses, int subarrays);

  CVector steer(double theta_deg, double v_mps = 0.0) const;

  int pulses() const { return pulses_; }
  int subarrays() const { return subarrays_; }
  int dimension() const { return pulses_ * subarrays_; }
  const ArrayGeometry& geometry() const { return geom_; }

 private:
  ArrayGeometry geom_;
  int pulses_;
  int subarrays_;
  double prf_hz_;
  double carrier_hz_;
};

}  // namespace radloc::steering
