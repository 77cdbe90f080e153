// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "radloc/experiments.hpp"

namespace radloc::experiments {

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  std::size_t failed_at = n;
  std::exception_ptr failure;
  std::mutex mu;
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (i < failed_at) {
        failed_at = i;
        failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < n && !failure; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  if (!failure) return;
  try {
    std::rethrow_exception(failure);
  } catch (const Error& e) {
    fail(e.code(), std::string(e.what()) + " (sample " + std::to_string(failed_at) + ")");
  } catch (const std::exception& e) {
    fail(ErrorCode::kNumerical, std::string(e.what()) + " (sample " + std::to_string(failed_at) + ")");
  }
}

Pipeline::Pipeline(const ExperimentConfig& cfg, const RadarSiteConfig& site, std::uint64_t scene_seed)
    : cfg_(cfg),
      site_(site),
      scene_seed_(scene_seed),
      synth_(scenario::build_clutter_scene(site, cfg.patches_per_bin, scene_seed), site, cfg.pulses,
             cfg.subarrays),
      grid_(cfg.grid_for(site)),
      table_(synth_.steering(), grid_),
      law_(cfg.target_law()) {}

scenario::GainCalibration Pipeline::calibrate(double scnr_db, std::uint64_t seed) const {
  Rng rng(seed);
  return scenario::calibrate_rcs_gain(synth_, scnr_db, law_, cfg_.realizations,
                                      cfg_.calibration_trials, rng);
}

Pipeline::Draw Pipeline::draw(double gain, std::uint64_t sample_seed) const {
  Rng rng(sample_seed);
  Draw d;
  d.target = scenario::sample_target(site_, law_, rng);
  d.returns = synth_.synthesize(d.target, cfg_.realizations, gain, rng);
  d.sample = namf::heatmap(d.returns, grid_, table_);
  for (double& v : d.sample.values) v = static_cast<double>(static_cast<float>(v));
  d.sample.label.range_m = d.target.range_m;
  d.sample.label.azimuth_deg = d.target.azimuth_deg;
  if (grid_.doppler()) d.sample.label.velocity_mps = d.target.velocity_mps;
  d.sample.scenario = site_.scenario_id;
  d.sample.seed = sample_seed;
  return d;
}

GeneratedSet Pipeline::generate(std::size_t n, double gain, double scnr_db,
                                std::uint64_t dataset_seed, std::size_t n_train,
                                std::size_t local_from) const {
  GeneratedSet out;
  Dataset& d = out.data;
  d.scenario = site_.scenario_id;
  d.seed = dataset_seed;
  d.scene_seed = scene_seed_;
  d.n_train = n_train;
  d.pulses = cfg_.pulses;
  d.subarrays = cfg_.subarrays;
  d.realizations = cfg_.realizations;
  d.gain = gain;
  d.mean_output_scnr_db = scnr_db;
  d.grid = grid_;
  d.samples.resize(n);
  out.peak.resize(n);
  out.local.resize(n);
  parallel_for(n, cfg_.threads(), [&](std::size_t i) {
    Draw dr = draw(gain, derive_seed(dataset_seed, i));
    dr.sample.mean_output_scnr_db = scnr_db;
    out.peak[i] = estimators::peak_cell_midpoint(dr.sample, grid_);
    if (i >= local_from) {
      out.local[i] = estimators::local_search(dr.returns, out.peak[i], grid_, synth_.steering());
    }
    d.samples[i] = std::move(dr.sample);
  });
  return out;
}

std::vector<estimators::Estimate> Pipeline::local_search_for(const Dataset& d,
                                                             std::size_t from) const {
  require(from <= d.samples.size(), "local search start beyond dataset");
  std::vector<estimators::Estimate> out(d.samples.size() - from);
  parallel_for(out.size(), cfg_.threads(), [&](std::size_t k) {
    const std::size_t i = from + k;
    const Draw dr = draw(d.gain, derive_seed(d.seed, i));
    const auto& stored = d.samples[i].label;
    if (dr.sample.label.range_m != stored.range_m ||
        dr.sample.label.azimuth_deg != stored.azimuth_deg) {
      fail(ErrorCode::kInvalidArgument, "dataset was generated with a different configuration");
    }
    const auto peak = estimators::peak_cell_midpoint(d.samples[i], d.grid);
    out[k] = estimators::local_search(dr.returns, peak, grid_, synth_.steering());
  });
  return out;
}

// ---------------------------------------------------------------- evaluation

namespace {

std::vector<double> truth_xy(const namf::Label& l) {
  const auto c = estimators::polar_to_cartesian(l.range_m, l.azimuth_deg);
  return {c.x_m, c.y_m};
}

std::vector<double> est_xy(const estimators::Estimate& e) {
  return {e.cartesian.x_m, e.cartesian.y_m};
}

}  // namespace

ErrorSummary summarize(std::span<const namf::HeatmapSample> samples,
                       std::span<const estimators::Estimate> peak,
                       std::span<const std::optional<estimators::Estimate>> local,
                       std::span<const estimators::Estimate> cnn) {
  require(!samples.empty(), "nothing to evaluate");
  require(peak.size() == samples.size(), "peak estimates do not match samples");
  require(local.empty() || local.size() == samples.size(), "local estimates do not match samples");
  require(cnn.empty() || cnn.size() == samples.size(), "CNN estimates do not match samples");
  using estimators::ErrorPair;
  std::vector<ErrorPair> loc_namf, th_namf, th_ls, v_namf, v_ls, loc_cnn, th_cnn, v_cnn;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& l = samples[i].label;
    loc_namf.push_back({truth_xy(l), est_xy(peak[i])});
    th_namf.push_back({{l.azimuth_deg}, {peak[i].azimuth_deg}});
    if (l.velocity_mps) v_namf.push_back({{*l.velocity_mps}, {peak[i].velocity_mps.value_or(0.0)}});
    if (!local.empty() && local[i]) {
      th_ls.push_back({{l.azimuth_deg}, {local[i]->azimuth_deg}});
      if (l.velocity_mps) v_ls.push_back({{*l.velocity_mps}, {local[i]->velocity_mps.value_or(0.0)}});
    }
    if (!cnn.empty()) {
      loc_cnn.push_back({truth_xy(l), est_xy(cnn[i])});
      th_cnn.push_back({{l.azimuth_deg}, {cnn[i].azimuth_deg}});
      if (l.velocity_mps) v_cnn.push_back({{*l.velocity_mps}, {cnn[i].velocity_mps.value_or(0.0)}});
    }
  }
  auto mean = [](const std::vector<ErrorPair>& p) {
    return p.empty() ? NAN : estimators::mean_error(p);
  };
  ErrorSummary s;
  s.count = samples.size();
  s.err_namf = mean(loc_namf);
  s.err_namf_theta = mean(th_namf);
  s.err_ls_theta = mean(th_ls);
  s.err_namf_v = mean(v_namf);
  s.err_ls_v = mean(v_ls);
  s.err_cnn = mean(loc_cnn);
  s.err_cnn_theta = mean(th_cnn);
  s.err_cnn_v = mean(v_cnn);
  return s;
}

namf::Label remap_label(const namf::Label& label, const namf::HeatmapGrid& from,
                        const namf::HeatmapGrid& to) {
  const nn::LabelNormalizer nf(from), nt(to);
  require(nf.dim() == nt.dim(), "grids disagree on label dimension");
  const auto v = nf.normalize(label);
  return nt.denormalize(v);
}

double max_slope_point(std::span<const double> scnr_db, std::span<const double> err) {
  require(scnr_db.size() == err.size() && scnr_db.size() >= 2, "need at least two curve points");
  std::size_t best = 0;
  double best_slope = -INFINITY;
  for (std::size_t i = 0; i + 1 < scnr_db.size(); ++i) {
    const double ds = scnr_db[i + 1] - scnr_db[i];
    require(ds > 0.0, "SCNR grid must be increasing");
    const double slope = (err[i] - err[i + 1]) / ds;
    if (slope > best_slope) {
      best_slope = slope;
      best = i;
    }
  }
  return 0.5 * (scnr_db[best] + scnr_db[best + 1]);
}

}  // namespace radloc::experiments
