// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "radloc/namf.hpp"
#include "radloc/scenario.hpp"
#include "radloc/steering.hpp"

namespace radloc::estimators {

enum class Method { kNamfPeak, kLocalSearch, kCnn };

struct Cartesian {
  double x_m = 0.0;
  double y_m = 0.0;
};

/// x = r sin(theta) (east), y = r cos(theta) (north); azimuth measured
/// clockwise from the y axis.
Cartesian polar_to_cartesian(double range_m, double azimuth_deg);
std::pair<double, double> cartesian_to_polar(const Cartesian& c);

struct Estimate {
  double range_m = 0.0;
  double azimuth_deg = 0.0;
  std::optional<double> velocity_mps;
  Cartesian cartesian;
  Method method = Method::kNamfPeak;
  /// Peak search saw an all-equal tensor.
  bool degenerate = false;

  static Estimate make(double range_m, double azimuth_deg, std::optional<double> velocity_mps,
                       Method method);
};

/// Grid coordinates of the global maximum; ties go to the lexicographically
/// smallest (bin, azimuth, velocity) index.
Estimate peak_cell_midpoint(const namf::HeatmapSample& sample, const namf::HeatmapGrid& grid);

/// Index of the maximum value with the same tie rule.
std::size_t argmax_index(std::span<const double> values);

/// Maximizes a unimodal `f` on [lo, hi]; stops when the bracket is narrower
/// than `tol`. Returns the abscissa.
double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tol);

struct SearchResult {
  double azimuth_deg;
  double velocity_mps;
  double value;
};

/// Coordinate-wise golden-section refinement of (azimuth[, velocity]) within
/// +-1 grid cell of the start, clipped to the grid extent. Two passes; the
/// result never scores below the start.
SearchResult refine_coordinates(const std::function<double(double, double)>& objective,
                                double start_theta_deg, double start_v_mps,
                                const namf::HeatmapGrid& grid);

/// Local NAMF search in the start's range bin.
Estimate local_search(const scenario::RadarReturnSet& returns, const Estimate& start,
                      const namf::HeatmapGrid& grid, const steering::SteeringModel& model);

struct ErrorPair {
  std::vector<double> truth;
  std::vector<double> estimate;
};

/// Mean Euclidean distance between truth and estimate vectors.
double mean_error(std::span<const ErrorPair> pairs);

double gain_factor(double err_baseline, double err_cnn);

}  // namespace radloc::estimators
