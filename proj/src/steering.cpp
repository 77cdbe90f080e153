// SPDX-License-Identifier: Apache-2.0
#include "radloc/steering.hpp"

#include <cmath>

namespace radloc::steering {

ArrayGeometry ArrayGeometry::from_site(const RadarSiteConfig& site) {
  return ArrayGeometry{site.array_h, site.array_v, site.element_spacing_m, site.wavelength_m()};
}

CVector condensed_spatial_steering(const ArrayGeometry& geom, int L, double theta_deg,
                                   double phi_deg) {
  if (L <= 0 || geom.n_horizontal % L != 0) {
    fail(ErrorCode::kInvalidArgument, "invalid subarray condensation: " +
                                          std::to_string(geom.n_horizontal) +
                                          " elements not divisible by L=" + std::to_string(L));
  }
  require(std::abs(theta_deg) < 90.0, "azimuth must lie strictly inside (-90, 90) degrees");
  require(geom.spacing_m > 0 && geom.wavelength_m > 0, "array geometry must be positive");

  const double k = 2.0 * kPi / geom.wavelength_m;
  const double th = deg2rad(theta_deg);
  const double ph = deg2rad(phi_deg);
  const double u_h = std::sin(th) * std::cos(ph);
  const double u_v = std::sin(ph);
  const double c_h = 0.5 * (geom.n_horizontal - 1);
  const double c_v = 0.5 * (geom.n_vertical - 1);
  const int per_sub = geom.n_horizontal / L;
  const double weight = 1.0 / std::sqrt(static_cast<double>(per_sub * geom.n_vertical));

  CVector out(L);
  for (int l = 0; l < L; ++l) {
    cdouble acc{0.0, 0.0};
    for (int h = l * per_sub; h < (l + 1) * per_sub; ++h) {
      for (int v = 0; v < geom.n_vertical; ++v) {
        const double phase =
            k * geom.spacing_m * ((h - c_h) * u_h + (v - c_v) * u_v);
        acc += weight * std::polar(1.0, phase);
      }
    }
    const double mag = std::abs(acc);
    if (mag > 1e-300) {
      out[l] = acc / mag;
    } else {
      // Subarray pattern null: fall back to the subarray-center phase.
      const double center = (l + 0.5) * per_sub - 0.5 - c_h;
      out[l] = std::polar(1.0, k * geom.spacing_m * center * u_h);
    }
  }
  return out;
}

CVector doppler_vector(double v_mps, int pulses, double prf_hz, double carrier_hz) {
  require(pulses >= 1, "pulse count must be at least 1");
  require(prf_hz > 0, "PRF must be positive");
  const double fd = 2.0 * v_mps * carrier_hz / kSpeedOfLight;
  const double cycles_per_pulse = fd / prf_hz;
  CVector d(pulses);
  for (int m = 0; m < pulses; ++m) {
    // Reduce to a fractional cycle before forming the phase so full wraps are exact.
    const double cycles = m * cycles_per_pulse;
    const double frac = cycles - std::round(cycles);
    d[m] = std::polar(1.0, -2.0 * kPi * frac);
  }
  return d;
}

CVector space_time_steering(const CVector& a, const CVector& d) {
  require(a.size() > 0 && d.size() > 0, "steering factors must be non-empty");
  const Eigen::Index L = a.size();
  CVector out(L * d.size());
  for (Eigen::Index m = 0; m < d.size(); ++m) out.segment(m * L, L) = d[m] * a;
  return out;
}

SteeringModel::SteeringModel(const RadarSiteConfig& site, int pulses, int subarrays)
    : geom_(ArrayGeometry::from_site(site)),
      pulses_(pulses),
      subarrays_(subarrays),
      prf_hz_(site.prf_hz),
      carrier_hz_(site.carrier_freq_hz) {
  require(pulses >= 1, "pulse count must be at least 1");
  require(pulses * subarrays >= 2, "space-time dimension must be at least 2");
  if (subarrays <= 0 || geom_.n_horizontal % subarrays != 0) {
    fail(ErrorCode::kInvalidArgument, "invalid subarray condensation: L=" +
                                          std::to_string(subarrays));
  }
}

CVector SteeringModel::steer(double theta_deg, double v_mps) const {
  return space_time_steering(condensed_spatial_steering(geom_, subarrays_, theta_deg, 0.0),
                             doppler_vector(v_mps, pulses_, prf_hz_, carrier_hz_));
}

}  // namespace radloc::steering
