// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <json.hpp>

#include "radloc/common.hpp"

namespace radloc {

enum class ScenarioId : char { O = 'O', N = 'N', W = 'W', S = 'S', E = 'E' };

ScenarioId parse_scenario_id(const std::string& s);
char scenario_char(ScenarioId id);

/// Radar, site and processing-region parameters for one scenario.
struct RadarSiteConfig {
  double carrier_freq_hz = 10.0e9;
  double bandwidth_hz = 5.0e6;
  double prf_hz = 1100.0;
  int array_h = 48;
  int array_v = 5;
  double element_spacing_m = 0.015;
  double platform_height_m = 1000.0;
  double platform_lat_deg = 32.4005;
  double platform_lon_deg = -117.1993;
  double r_min_m = 14553.0;
  double r_max_m = 14673.0;
  double theta_min_deg = 20.0;
  double theta_max_deg = 30.0;
  int kappa = 5;
  double cnr_db = 20.0;
  ScenarioId scenario_id = ScenarioId::O;

  double range_bin_m() const { return kSpeedOfLight / (2.0 * bandwidth_hz); }
  double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }
  /// Lower/upper edge of the processed range extent (bin edges, not midpoints).
  double range_lo_m() const { return r_min_m - 0.5 * range_bin_m(); }
  double range_hi_m() const { return r_max_m + 0.5 * range_bin_m(); }
  /// Index of the range bin containing `range_m`, clamped to [0, kappa).
  int bin_of(double range_m) const;
  double bin_center_m(int bin) const { return r_min_m + bin * range_bin_m(); }

  /// Throws Error(kInvalidArgument) on any broken invariant.
  void validate() const;
};

/// Original (matched) geometry.
RadarSiteConfig original_site();

/// Platform displaced 1 km in `direction`; region bounds follow the
/// surveyed displaced geometry.
RadarSiteConfig displace_scenario(const RadarSiteConfig& config, ScenarioId direction);

/// Site for `id`, derived from the original geometry.
RadarSiteConfig site_for(ScenarioId id);

/// Clutter-scene seed for a site. Different scenario ids map to unrelated
/// seeds so their clutter genuinely differs.
std::uint64_t scene_seed(const RadarSiteConfig& config, std::uint64_t base_seed);

void to_json(nlohmann::json& j, const RadarSiteConfig& c);
void from_json(const nlohmann::json& j, RadarSiteConfig& c);

}  // namespace radloc
