// SPDX-License-Identifier: Apache-2.0
#include "radloc/config.hpp"

#include <cmath>

namespace radloc {

ScenarioId parse_scenario_id(const std::string& s) {
  if (s == "O") return ScenarioId::O;
  if (s == "N") return ScenarioId::N;
  if (s == "W") return ScenarioId::W;
  if (s == "S") return ScenarioId::S;
  if (s == "E") return ScenarioId::E;
  fail(ErrorCode::kInvalidArgument, "unknown scenario id '" + s + "' (expected O, N, W, S or E)");
}

char scenario_char(ScenarioId id) { return static_cast<char>(id); }

int RadarSiteConfig::bin_of(double range_m) const {
  const double idx = std::floor((range_m - range_lo_m()) / range_bin_m());
  if (idx < 0.0) return 0;
  if (idx >= kappa) return kappa - 1;
  return static_cast<int>(idx);
}

void RadarSiteConfig::validate() const {
  const double vals[] = {carrier_freq_hz, bandwidth_hz, prf_hz, element_spacing_m,
                         platform_height_m, r_min_m, r_max_m, theta_min_deg,
                         theta_max_deg, cnr_db, platform_lat_deg, platform_lon_deg};
  for (double v : vals) require(std::isfinite(v), "non-finite site configuration value");
  require(carrier_freq_hz > 0 && bandwidth_hz > 0 && prf_hz > 0,
          "frequencies must be positive");
  require(element_spacing_m > 0 && platform_height_m > 0, "lengths must be positive");
  require(array_h > 0 && array_v > 0, "array dimensions must be positive");
  require(r_min_m > 0, "r_min must be positive");
  require(kappa >= 1, "kappa must be at least 1");
  require(theta_max_deg > theta_min_deg, "theta_max must exceed theta_min");
  const double expect = (kappa - 1) * range_bin_m();
  require(std::abs((r_max_m - r_min_m) - expect) < 1e-6,
          "r_max - r_min must equal (kappa - 1) range bins");
}

RadarSiteConfig original_site() { return RadarSiteConfig{}; }

RadarSiteConfig displace_scenario(const RadarSiteConfig& config, ScenarioId direction) {
  require(config.scenario_id == ScenarioId::O, "can only displace the original scenario");
  RadarSiteConfig out = config;
  out.scenario_id = direction;
  switch (direction) {
    case ScenarioId::N:
      out.platform_lat_deg = 32.4095;
      out.platform_lon_deg = -117.1993;
      out.r_min_m = 13800.0;
      out.r_max_m = 13920.0;
      break;
    case ScenarioId::W:
      out.platform_lat_deg = 32.4005;
      out.platform_lon_deg = -117.2099;
      out.r_min_m = 15207.0;
      out.r_max_m = 15327.0;
      break;
    case ScenarioId::S:
      out.platform_lat_deg = 32.3915;
      out.platform_lon_deg = -117.1993;
      out.r_min_m = 15321.0;
      out.r_max_m = 15441.0;
      break;
    case ScenarioId::E:
      out.platform_lat_deg = 32.4005;
      out.platform_lon_deg = -117.1887;
      out.r_min_m = 13921.0;
      out.r_max_m = 14041.0;
      break;
    case ScenarioId::O:
      fail(ErrorCode::kInvalidArgument, "displacement direction must be N, W, S or E");
  }
  out.theta_min_deg = 20.0;
  out.theta_max_deg = 30.0;
  return out;
}

RadarSiteConfig site_for(ScenarioId id) {
  auto base = original_site();
  return id == ScenarioId::O ? base : displace_scenario(base, id);
}

std::uint64_t scene_seed(const RadarSiteConfig& config, std::uint64_t base_seed) {
  return derive_seed(base_seed, 0x5343454e00ULL + static_cast<unsigned char>(config.scenario_id));
}

void to_json(nlohmann::json& j, const RadarSiteConfig& c) {
  j = nlohmann::json{
      {"carrier_freq_hz", c.carrier_freq_hz},
      {"bandwidth_hz", c.bandwidth_hz},
      {"prf_hz", c.prf_hz},
      {"array_h", c.array_h},
      {"array_v", c.array_v},
      {"element_spacing_m", c.element_spacing_m},
      {"platform_height_m", c.platform_height_m},
      {"platform_lat_deg", c.platform_lat_deg},
      {"platform_lon_deg", c.platform_lon_deg},
      {"r_min_m", c.r_min_m},
      {"r_max_m", c.r_max_m},
      {"theta_min_deg", c.theta_min_deg},
      {"theta_max_deg", c.theta_max_deg},
      {"kappa", c.kappa},
      {"cnr_db", c.cnr_db},
      {"scenario_id", std::string(1, scenario_char(c.scenario_id))},
  };
}

void from_json(const nlohmann::json& j, RadarSiteConfig& c) {
  // Start from the geometry of the named scenario so a document may give
  // just {"scenario_id": "S"} and override individual fields.
  if (j.contains("scenario_id")) {
    c = site_for(parse_scenario_id(j.at("scenario_id").get<std::string>()));
  }
  auto opt = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  opt("carrier_freq_hz", c.carrier_freq_hz);
  opt("bandwidth_hz", c.bandwidth_hz);
  opt("prf_hz", c.prf_hz);
  opt("array_h", c.array_h);
  opt("array_v", c.array_v);
  opt("element_spacing_m", c.element_spacing_m);
  opt("platform_height_m", c.platform_height_m);
  opt("platform_lat_deg", c.platform_lat_deg);
  opt("platform_lon_deg", c.platform_lon_deg);
  opt("r_min_m", c.r_min_m);
  opt("r_max_m", c.r_max_m);
  opt("theta_min_deg", c.theta_min_deg);
  opt("theta_max_deg", c.theta_max_deg);
  opt("kappa", c.kappa);
  opt("cnr_db", c.cnr_db);
}

}  // namespace radloc
