// SPDX-License-Identifier: Apache-2.0
#include "radloc/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace radloc::estimators {

Cartesian polar_to_cartesian(double range_m, double azimuth_deg) {
  require(range_m >= 0.0, "range must be non-negative");
  const double th = deg2rad(azimuth_deg);
  return {range_m * std::sin(th), range_m * std::cos(th)};
}

std::pair<double, double> cartesian_to_polar(const Cartesian& c) {
  return {std::hypot(c.x_m, c.y_m), rad2deg(std::atan2(c.x_m, c.y_m))};
}

Estimate Estimate::make(double range_m, double azimuth_deg, std::optional<double> velocity_mps,
                        Method method) {
  Estimate e;
  e.range_m = range_m;
  e.azimuth_deg = azimuth_deg;
  e.velocity_mps = velocity_mps;
  e.cartesian = polar_to_cartesian(range_m, azimuth_deg);
  e.method = method;
  return e;
}

std::size_t argmax_index(std::span<const double> values) {
  require(!values.empty(), "argmax of an empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

Estimate peak_cell_midpoint(const namf::HeatmapSample& sample, const namf::HeatmapGrid& grid) {
  require(sample.values.size() == grid.size(), "heatmap does not match grid");
  const std::size_t idx = argmax_index(sample.values);
  const int nv = grid.n_velocity();
  const int k = static_cast<int>(idx % nv);
  const int j = static_cast<int>((idx / nv) % grid.n_azimuth);
  const int i = static_cast<int>(idx / (static_cast<std::size_t>(nv) * grid.n_azimuth));
  std::optional<double> v;
  if (grid.doppler()) v = grid.velocity_at(k);
  Estimate e = Estimate::make(grid.range_at(i), grid.theta_at(j), v, Method::kNamfPeak);
  const auto [lo, hi] = std::minmax_element(sample.values.begin(), sample.values.end());
  e.degenerate = (*lo == *hi);
  return e;
}

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tol) {
  require(hi >= lo, "empty search interval");
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  // Endpoints are candidates too so monotone objectives land on the boundary.
  double best = 0.5 * (a + b);
  double fbest = f(best);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx > fbest) {
      best = x;
      fbest = fx;
    }
  }
  return best;
}

SearchResult refine_coordinates(const std::function<double(double, double)>& objective,
                                double start_theta_deg, double start_v_mps,
                                const namf::HeatmapGrid& grid) {
  const double th_lo = std::max(grid.theta_min_deg, start_theta_deg - grid.dtheta_deg);
  const double th_hi = std::min(grid.theta_max_deg(), start_theta_deg + grid.dtheta_deg);
  double v_lo = start_v_mps, v_hi = start_v_mps, dv = 0.0;
  if (grid.doppler()) {
    dv = grid.velocity->dv_mps;
    v_lo = std::max(grid.velocity->v_min_mps, start_v_mps - dv);
    v_hi = std::min(grid.v_max_mps(), start_v_mps + dv);
  }

  SearchResult start{start_theta_deg, start_v_mps, objective(start_theta_deg, start_v_mps)};
  SearchResult cur = start;
  for (int pass = 0; pass < 2; ++pass) {
    cur.azimuth_deg = golden_section_maximize(
        [&](double th) { return objective(th, cur.velocity_mps); }, th_lo, th_hi,
        1e-4 * grid.dtheta_deg);
    if (grid.doppler()) {
      cur.velocity_mps = golden_section_maximize(
          [&](double v) { return objective(cur.azimuth_deg, v); }, v_lo, v_hi, 1e-4 * dv);
    }
  }
  cur.value = objective(cur.azimuth_deg, cur.velocity_mps);
  return cur.value >= start.value ? cur : start;
}

Estimate local_search(const scenario::RadarReturnSet& returns, const Estimate& start,
                      const namf::HeatmapGrid& grid, const steering::SteeringModel& model) {
  const int bin = static_cast<int>(std::lround((start.range_m - grid.r_min_m) / grid.dr_m));
  require(bin >= 0 && bin < returns.kappa(), "start estimate outside the range grid");
  const namf::NamfBin nb(returns.Y[bin],
                         namf::CovarianceFactor(namf::sample_covariance(returns.Z[bin])));
  const double v0 = start.velocity_mps.value_or(0.0);
  const auto res = refine_coordinates(
      [&](double th, double v) { return nb.statistic(model.steer(th, v)); }, start.azimuth_deg,
      v0, grid);
  std::optional<double> v;
  if (grid.doppler()) v = res.velocity_mps;
  return Estimate::make(grid.range_at(bin), res.azimuth_deg, v, Method::kLocalSearch);
}

double mean_error(std::span<const ErrorPair> pairs) {
  require(!pairs.empty(), "mean error over an empty set");
  double acc = 0.0;
  for (const auto& p : pairs) {
    require(p.truth.size() == p.estimate.size() && !p.truth.empty(),
            "dimension mismatch in error pair");
    double sq = 0.0;
    for (std::size_t i = 0; i < p.truth.size(); ++i) {
      const double d = p.truth[i] - p.estimate[i];
      sq += d * d;
    }
    acc += std::sqrt(sq);
  }
  return acc / static_cast<double>(pairs.size());
}

double gain_factor(double err_baseline, double err_cnn) {
  if (err_cnn == 0.0) fail(ErrorCode::kNumerical, "degenerate zero error");
  require(err_cnn > 0.0, "CNN error must be positive");
  return err_baseline / err_cnn;
}

}  // namespace radloc::estimators
