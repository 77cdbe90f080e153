// SPDX-License-Identifier: Apache-2.0
#include "radloc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "radloc/estimators.hpp"

namespace radloc::analysis {

CMatrix pooled_covariance(const scenario::ReturnSynthesizer& synth) {
  const int kappa = synth.scene().kappa;
  require(kappa >= 1, "scene has no range bins");
  CMatrix acc = synth.analytic_covariance(0);
  for (int b = 1; b < kappa; ++b) acc += synth.analytic_covariance(b);
  return acc / static_cast<double>(kappa);
}

SubspaceBasis clutter_subspace(const CMatrix& covariance, double noise_power, ScenarioId source) {
  require(covariance.rows() == covariance.cols() && covariance.rows() > 0,
          "covariance must be square");
  require(noise_power > 0.0, "noise power must be positive");
  const CMatrix herm = 0.5 * (covariance + covariance.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  if (es.info() != Eigen::Success) fail(ErrorCode::kNumerical, "eigendecomposition failed");
  const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
  const Eigen::Index n = ev.size();
  Eigen::Index k = 0;
  while (k < n && ev[n - 1 - k] > 3.0 * noise_power) ++k;
  if (k == 0) fail(ErrorCode::kNumerical, "no clutter subspace above noise floor");
  if (k == n) fail(ErrorCode::kNumerical, "clutter subspace fills the whole space");
  SubspaceBasis out;
  out.source = source;
  out.columns.resize(n, k);
  for (Eigen::Index i = 0; i < k; ++i) out.columns.col(i) = es.eigenvectors().col(n - 1 - i);
  return out;
}

double chordal_distance(const SubspaceBasis& U, const SubspaceBasis& V) {
  if (U.ambient() != V.ambient()) {
    fail(ErrorCode::kInvalidArgument, "subspaces live in different ambient dimensions");
  }
  require(U.rank() >= 1 && V.rank() >= 1, "empty subspace");
  const CMatrix M = U.columns.adjoint() * V.columns;
  const Eigen::VectorXd s = Eigen::JacobiSVD<CMatrix>(M).singularValues();
  const Eigen::Index k = std::min(U.rank(), V.rank());
  double d = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::min(s[i], 1.0);
    d += 1.0 - c * c;
  }
  return d;
}

namespace {

std::vector<double> ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "rank correlation needs paired samples");
  if (x.size() < 2) return NAN;
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return NAN;
  return sxy / std::sqrt(sxx * syy);
}

MismatchReport mismatch_report(const std::vector<ScenarioId>& scenarios,
                               const std::map<ScenarioId, double>& errors_cnn,
                               const std::map<ScenarioId, double>& errors_baseline,
                               const std::map<ScenarioId, double>& chordal) {
  auto lookup = [](const std::map<ScenarioId, double>& m, ScenarioId id, const char* what) {
    const auto it = m.find(id);
    if (it == m.end()) {
      fail(ErrorCode::kInvalidArgument,
           std::string("missing scenario key ") + scenario_char(id) + " in " + what);
    }
    return it->second;
  };
  MismatchReport rep;
  std::vector<double> gains, dists;
  for (ScenarioId id : scenarios) {
    MismatchRow row;
    row.scenario = id;
    row.err_cnn = lookup(errors_cnn, id, "CNN errors");
    row.err_baseline = lookup(errors_baseline, id, "baseline errors");
    row.chordal = lookup(chordal, id, "chordal distances");
    row.gain = estimators::gain_factor(row.err_baseline, row.err_cnn);
    gains.push_back(row.gain);
    dists.push_back(row.chordal);
    rep.rows.push_back(row);
  }
  rep.rank_correlation = spearman_correlation(gains, dists);
  return rep;
}

}  // namespace radloc::analysis
