// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <span>
#include <vector>

#include "radloc/common.hpp"
#include "radloc/config.hpp"
#include "radloc/scenario.hpp"

namespace radloc::analysis {

/// Orthonormal basis of a clutter subspace, columns sorted by descending
/// eigenvalue.
struct SubspaceBasis {
  CMatrix columns;
  ScenarioId source = ScenarioId::O;

  int rank() const { return static_cast<int>(columns.cols()); }
  int ambient() const { return static_cast<int>(columns.rows()); }
};

/// Mean of the closed-form clutter-plus-noise covariances over all range bins.
CMatrix pooled_covariance(const scenario::ReturnSynthesizer& synth);

/// Eigenvectors of `covariance` whose eigenvalues exceed 3 * noise_power.
SubspaceBasis clutter_subspace(const CMatrix& covariance, double noise_power,
                               ScenarioId source = ScenarioId::O);

/// Sum over the min(rank) principal angles of sin^2, computed as
/// sum (1 - s_i^2) with s_i the singular values of U^H V.
double chordal_distance(const SubspaceBasis& U, const SubspaceBasis& V);

/// Spearman rank correlation with average ranks for ties. NaN when either
/// input is constant or fewer than two points are given.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

struct MismatchRow {
  ScenarioId scenario = ScenarioId::O;
  double err_cnn = 0.0;
  double err_baseline = 0.0;
  double gain = 0.0;
  double chordal = 0.0;
};

struct MismatchReport {
  std::vector<MismatchRow> rows;
  /// Rank correlation between gain factor and chordal distance; reported
  /// only.
  double rank_correlation = 0.0;
};

MismatchReport mismatch_report(const std::vector<ScenarioId>& scenarios,
                               const std::map<ScenarioId, double>& errors_cnn,
                               const std::map<ScenarioId, double>& errors_baseline,
                               const std::map<ScenarioId, double>& chordal);

}  // namespace radloc::analysis
