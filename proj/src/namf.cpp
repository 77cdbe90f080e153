// SPDX-License-Identifier: Apache-2.0
#include "radloc/namf.hpp"

#include <cmath>

namespace radloc::namf {

CMatrix sample_covariance(const CMatrix& Z) {
  require(Z.cols() >= 1, "sample covariance needs at least one realization");
  CMatrix S = Z * Z.adjoint() / static_cast<double>(Z.cols());
  // Force exact Hermitian symmetry; the product is only symmetric to rounding.
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    S(i, i) = cdouble(S(i, i).real(), 0.0);
    for (Eigen::Index j = i + 1; j < S.cols(); ++j) S(j, i) = std::conj(S(i, j));
  }
  return S;
}

CovarianceFactor::CovarianceFactor(const CMatrix& sigma) {
  require(sigma.rows() == sigma.cols() && sigma.rows() > 0, "covariance must be square");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(sigma, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  const double largest = ev.maxCoeff();
  if (!(largest > 0.0) || !(ev.minCoeff() > 1e-12 * largest)) {
    fail(ErrorCode::kSingular, "singular covariance: need K >= " +
                                   std::to_string(sigma.rows()) + " samples (dimension)");
  }
  llt_.compute(sigma);
  if (llt_.info() != Eigen::Success) {
    fail(ErrorCode::kSingular, "singular covariance: factorization failed");
  }
}

CMatrix CovarianceFactor::whiten(const CMatrix& M) const {
  require(M.rows() == llt_.rows(), "dimension mismatch against covariance");
  return llt_.matrixL().solve(M);
}

CVector CovarianceFactor::whiten(const CVector& v) const {
  require(v.size() == llt_.rows(), "dimension mismatch against covariance");
  return llt_.matrixL().solve(v);
}

double CovarianceFactor::quadratic_trace(const CMatrix& M) const {
  return whiten(M).squaredNorm();
}

NamfBin::NamfBin(const CMatrix& Y, const CMatrix& sigma) : factor_(sigma) { prepare(Y); }

NamfBin::NamfBin(const CMatrix& Y, CovarianceFactor factor) : factor_(std::move(factor)) {
  prepare(Y);
}

void NamfBin::prepare(const CMatrix& Y) {
  whitened_y_ = factor_.whiten(Y);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < whitened_y_.cols(); ++k) {
    const double d = whitened_y_.col(k).squaredNorm();
    acc += d * d;
  }
  diag_norm_ = std::sqrt(acc);
}

double NamfBin::statistic(const CVector& steering) const {
  const CVector b = factor_.whiten(steering);
  const double denom = b.squaredNorm() * diag_norm_;
  if (!(denom > 0.0)) fail(ErrorCode::kNumerical, "NAMF denominator vanished");
  const double num = (b.adjoint() * whitened_y_).squaredNorm();
  return num / denom;
}

double namf_statistic(const CMatrix& Y, const CMatrix& sigma, const CVector& steering) {
  require(Y.rows() == sigma.rows() && steering.size() == sigma.rows(),
          "NAMF dimension mismatch");
  return NamfBin(Y, sigma).statistic(steering);
}

HeatmapGrid HeatmapGrid::from_site(const RadarSiteConfig& site, double dtheta_deg,
                                   std::optional<scenario::VelocityInterval> vel,
                                   double dv_mps) {
  require(dtheta_deg > 0, "azimuth step must be positive");
  HeatmapGrid g;
  g.r_min_m = site.r_min_m;
  g.dr_m = site.range_bin_m();
  g.kappa = site.kappa;
  g.theta_min_deg = site.theta_min_deg;
  g.dtheta_deg = dtheta_deg;
  g.n_azimuth =
      static_cast<int>(std::floor((site.theta_max_deg - site.theta_min_deg) / dtheta_deg + 1e-9)) + 1;
  if (vel) {
    require(dv_mps > 0 && vel->max_mps > vel->min_mps, "invalid velocity axis");
    g.velocity = VelocityAxis{
        vel->min_mps, dv_mps,
        static_cast<int>(std::floor((vel->max_mps - vel->min_mps) / dv_mps + 1e-9)) + 1};
  }
  return g;
}

std::vector<std::size_t> HeatmapGrid::shape() const {
  std::vector<std::size_t> s{static_cast<std::size_t>(kappa),
                             static_cast<std::size_t>(n_azimuth)};
  if (velocity) s.push_back(static_cast<std::size_t>(velocity->n_velocity));
  return s;
}

SteeringTable::SteeringTable(const steering::SteeringModel& model, const HeatmapGrid& grid) {
  table_.resize(model.dimension(), static_cast<Eigen::Index>(grid.n_azimuth) * grid.n_velocity());
  Eigen::Index col = 0;
  for (int j = 0; j < grid.n_azimuth; ++j) {
    for (int k = 0; k < grid.n_velocity(); ++k) {
      table_.col(col++) = model.steer(grid.theta_at(j), grid.velocity_at(k));
    }
  }
}

HeatmapSample heatmap(const scenario::RadarReturnSet& returns, const HeatmapGrid& grid,
                      const SteeringTable& table) {
  require(returns.kappa() == grid.kappa, "returns and grid disagree on range-bin count");
  const CMatrix& S = table.matrix();
  require(S.cols() == static_cast<Eigen::Index>(grid.n_azimuth) * grid.n_velocity(),
          "steering table does not match grid");

  HeatmapSample out;
  out.shape = grid.shape();
  out.values.resize(grid.size());
  for (int bin = 0; bin < grid.kappa; ++bin) {
    const CMatrix& Y = returns.Y[bin];
    require(Y.rows() == S.rows(), "steering dimension does not match data");
    NamfBin nb(Y, CovarianceFactor(sample_covariance(returns.Z[bin])));
    const CMatrix B = nb.factor().whiten(S);
    const CMatrix& W = nb.whitened_data();
    Eigen::VectorXd num;
    if (W.cols() > W.rows()) {
      // b^H (W W^H) b is cheaper once K exceeds the dimension.
      CMatrix G(W.rows(), W.rows());
      G.setZero();
      G.selfadjointView<Eigen::Lower>().rankUpdate(W);
      const CMatrix GB = G.selfadjointView<Eigen::Lower>() * B;
      num = B.cwiseProduct(GB.conjugate()).colwise().sum().real().transpose().cwiseAbs();
    } else {
      num = (B.adjoint() * W).rowwise().squaredNorm();
    }
    const Eigen::VectorXd bnorm = B.colwise().squaredNorm().transpose();
    const std::size_t base = grid.index(bin, 0, 0);
    for (Eigen::Index g = 0; g < S.cols(); ++g) {
      const double v = num[g] / (bnorm[g] * nb.diag_norm());
      if (!std::isfinite(v)) fail(ErrorCode::kNumerical, "non-finite NAMF statistic");
      out.values[base + static_cast<std::size_t>(g)] = v;
    }
  }
  return out;
}

double output_scnr(const CMatrix& X, const CMatrix& Z, const CovarianceFactor& factor) {
  const double den = factor.quadratic_trace(Z);
  if (!(den > 0.0)) fail(ErrorCode::kNumerical, "output SCNR: zero clutter-plus-noise trace");
  return 10.0 * std::log10(factor.quadratic_trace(X) / den);
}

double output_scnr(const CMatrix& X, const CMatrix& Z, const CMatrix& sigma) {
  return output_scnr(X, Z, CovarianceFactor(sigma));
}

double breakdown_threshold(int pulses, int subarrays, int realizations) {
  require(pulses >= 1 && subarrays >= 1 && realizations >= 1, "counts must be positive");
  return 10.0 * std::log10(std::sqrt(static_cast<double>(pulses) * subarrays / realizations));
}

}  // namespace radloc::namf
