// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>

#include "radloc/experiments.hpp"
#include "radloc/nn/checkpoint.hpp"

namespace radloc::experiments {

namespace {

void say(const Log& log, const std::string& msg) {
  if (log) log(msg);
}

std::string fmt(double v) { return format_real(v); }

nn::TrainConfig train_config_for(const nn::TrainConfig& base, std::uint64_t seed,
                                 std::string_view label, std::uint64_t index) {
  nn::TrainConfig tc = base;
  tc.seed = stream_seed(derive_seed(seed, base.seed), label, index);
  return tc;
}

std::uint64_t scenario_key(ScenarioId id) { return static_cast<std::uint64_t>(scenario_char(id)); }

/// Trains a fresh network on a generated matched-case set and evaluates all
/// estimators on its validation split.
struct MatchedResult {
  ErrorSummary summary;
  nn::CnnModel model;
};

MatchedResult train_and_evaluate(const ExperimentConfig& cfg, const GeneratedSet& gen,
                                 std::span<const namf::HeatmapSample> train_set,
                                 std::string_view label, std::uint64_t index, const Log& log) {
  const Dataset& d = gen.data;
  MatchedResult r;
  r.model = build_model_for(d.grid, stream_seed(cfg.seed, std::string(label) + "-model", index));
  const auto val = d.validation_split();
  const auto tc = train_config_for(cfg.train, cfg.seed, std::string(label) + "-train", index);
  const auto hist = nn::train(r.model, train_set, val, d.grid, tc);
  say(log, std::string(label) + ": trained " + std::to_string(hist.train_loss.size()) +
               " epochs, best validation loss " + fmt(hist.best_loss));
  const auto cnn = nn::predict_denormalized(r.model, val, d.grid);
  const std::span<const estimators::Estimate> peak(gen.peak.data() + d.n_train, val.size());
  const std::span<const std::optional<estimators::Estimate>> local(gen.local.data() + d.n_train,
                                                                   val.size());
  r.summary = summarize(val, peak, local, cnn);
  return r;
}

}  // namespace

nn::CnnModel build_model_for(const namf::HeatmapGrid& grid, std::uint64_t seed) {
  return grid.doppler() ? nn::build_doppler_cnn(grid, seed) : nn::build_baseline_cnn(grid, seed);
}

GeneratedSet generate_dataset(const ExperimentConfig& cfg, const Log& log) {
  cfg.validate();
  const Pipeline p(cfg, cfg.site, scene_seed(cfg.site, cfg.seed));
  const auto cal = p.calibrate(cfg.scnr_db, stream_seed(cfg.seed, "calibrate", 0));
  say(log, "calibrated gain " + fmt(cal.gain) + " for " + fmt(cal.achieved_db) + " dB");
  const std::size_t n_train = cfg.train_count(cfg.num_samples);
  return p.generate(cfg.num_samples, cal.gain, cfg.scnr_db, stream_seed(cfg.seed, "dataset", 0),
                    n_train, n_train);
}

nn::CnnModel train_on(const Dataset& d, const nn::TrainConfig& tc, std::uint64_t model_seed,
                      nn::TrainHistory* history, const Log& log) {
  require(d.n_train > 0 && d.n_train < d.samples.size(), "dataset needs train and validation samples");
  nn::CnnModel m = build_model_for(d.grid, model_seed);
  auto h = nn::train(m, d.train_split(), d.validation_split(), d.grid, tc,
                     [&](std::size_t e, double tl, double vl) {
                       say(log, "epoch " + std::to_string(e) + " train " + fmt(tl) + " val " + fmt(vl));
                     });
  if (history) *history = std::move(h);
  return m;
}

ErrorSummary evaluate_dataset(const ExperimentConfig& cfg_in, const Dataset& d,
                              nn::CnnModel* model) {
  ExperimentConfig cfg = cfg_in;
  cfg.pulses = d.pulses;
  cfg.subarrays = d.subarrays;
  cfg.realizations = d.realizations;
  cfg.doppler = d.grid.doppler();
  if (cfg.site.scenario_id != d.scenario) cfg.site = site_for(d.scenario);
  const auto val = d.validation_split();
  require(!val.empty(), "dataset has no validation samples");
  const Pipeline p(cfg, cfg.site, d.scene_seed);
  require(p.grid().shape() == d.grid.shape(), "config grid does not match the dataset");

  std::vector<estimators::Estimate> peak;
  for (const auto& s : val) peak.push_back(estimators::peak_cell_midpoint(s, d.grid));
  const auto ls = p.local_search_for(d, d.n_train);
  std::vector<std::optional<estimators::Estimate>> local(ls.begin(), ls.end());
  std::vector<estimators::Estimate> cnn;
  if (model) cnn = nn::predict_denormalized(*model, val, d.grid);
  return summarize(val, peak, local, cnn);
}

// ---------------------------------------------------------------- threshold

ExperimentOutput run_threshold_experiment(const ExperimentConfig& cfg_in, const Log& log) {
  cfg_in.validate();
  require(!cfg_in.scnr_grid_db.empty() && !cfg_in.realizations_grid.empty(),
          "threshold experiment needs SCNR and realization grids");
  CsvTable t;
  t.header = {"realizations", "mean_output_scnr_db", "err_namf_m", "breakdown_threshold_db",
              "err_namf_theta_deg"};
  for (int K : cfg_in.realizations_grid) {
    ExperimentConfig cfg = cfg_in;
    cfg.realizations = K;
    const Pipeline p(cfg, cfg.site, scene_seed(cfg.site, cfg.seed));
    const double thr = namf::breakdown_threshold(cfg.pulses, cfg.subarrays, K);
    for (std::size_t i = 0; i < cfg.scnr_grid_db.size(); ++i) {
      const double s = cfg.scnr_grid_db[i];
      const std::uint64_t key = static_cast<std::uint64_t>(K) * 1000 + i;
      const auto cal = p.calibrate(s, stream_seed(cfg.seed, "threshold-calibrate", key));
      const auto gen = p.generate(cfg.threshold_samples, cal.gain, s,
                                  stream_seed(cfg.seed, "threshold-dataset", key), 0,
                                  cfg.threshold_samples);
      const auto sum = summarize(gen.data.samples, gen.peak, {}, {});
      t.add({std::int64_t{K}, s, sum.err_namf, thr, sum.err_namf_theta});
      say(log, "threshold K=" + std::to_string(K) + " scnr " + fmt(s) + " dB: err_namf " +
                   fmt(sum.err_namf) + " m");
    }
  }
  ExperimentOutput out;
  out.tables.emplace_back("threshold.csv", std::move(t));
  return out;
}

// ---------------------------------------------------------------- matched sweeps

ExperimentOutput run_scnr_sweep(const ExperimentConfig& cfg, const Log& log) {
  cfg.validate();
  require(!cfg.scnr_grid_db.empty(), "SCNR sweep needs a non-empty grid");
  const Pipeline p(cfg, cfg.site, scene_seed(cfg.site, cfg.seed));
  const std::size_t n_train = cfg.train_count(cfg.num_samples);
  CsvTable t;
  t.header = {"scnr", "err_namf", "err_ls_theta", "err_cnn", "err_namf_theta", "err_cnn_theta",
              "gain_factor"};
  ExperimentOutput out;
  for (std::size_t i = 0; i < cfg.scnr_grid_db.size(); ++i) {
    const double s = cfg.scnr_grid_db[i];
    const auto cal = p.calibrate(s, stream_seed(cfg.seed, "scnr-calibrate", i));
    const auto gen = p.generate(cfg.num_samples, cal.gain, s,
                                stream_seed(cfg.seed, "scnr-dataset", i), n_train, n_train);
    auto r = train_and_evaluate(cfg, gen, gen.data.train_split(), "scnr", i, log);
    const auto& e = r.summary;
    t.add({s, e.err_namf, e.err_ls_theta, e.err_cnn, e.err_namf_theta, e.err_cnn_theta,
           estimators::gain_factor(e.err_namf, e.err_cnn)});
    say(log, "scnr " + fmt(s) + " dB: namf " + fmt(e.err_namf) + " m, cnn " + fmt(e.err_cnn) + " m");
    out.checkpoints.emplace_back("sweep_scnr_" + std::to_string(i) + ".rlnn",
                                 nn::save_checkpoint(r.model));
  }
  out.tables.emplace_back("sweep_scnr.csv", std::move(t));
  return out;
}

ExperimentOutput run_size_sweep(const ExperimentConfig& cfg, const Log& log) {
  cfg.validate();
  require(!cfg.size_grid.empty(), "size sweep needs a non-empty grid");
  const std::size_t n_max = *std::max_element(cfg.size_grid.begin(), cfg.size_grid.end());
  const std::size_t pool_train = cfg.train_count(n_max);
  const Pipeline p(cfg, cfg.site, scene_seed(cfg.site, cfg.seed));
  const auto cal = p.calibrate(cfg.scnr_db, stream_seed(cfg.seed, "size-calibrate", 0));
  // One pool; every size trains on a prefix and all share the pool's
  // validation tail.
  const auto gen = p.generate(n_max, cal.gain, cfg.scnr_db, stream_seed(cfg.seed, "size-dataset", 0),
                              pool_train, pool_train);
  CsvTable t;
  t.header = {"N", "err_cnn", "err_namf", "n_train", "err_ls_theta", "err_cnn_theta"};
  ExperimentOutput out;
  for (std::size_t i = 0; i < cfg.size_grid.size(); ++i) {
    const std::size_t n = cfg.size_grid[i];
    const std::size_t nt = cfg.train_count(n);
    auto r = train_and_evaluate(cfg, gen, gen.data.train_split().first(nt), "size", i, log);
    const auto& e = r.summary;
    t.add({static_cast<std::int64_t>(n), e.err_cnn, e.err_namf, static_cast<std::int64_t>(nt),
           e.err_ls_theta, e.err_cnn_theta});
    say(log, "N=" + std::to_string(n) + ": cnn " + fmt(e.err_cnn) + " m, namf " + fmt(e.err_namf) + " m");
    out.checkpoints.emplace_back("sweep_size_" + std::to_string(n) + ".rlnn",
                                 nn::save_checkpoint(r.model));
  }
  out.tables.emplace_back("sweep_size.csv", std::move(t));
  return out;
}

ExperimentOutput run_doppler_experiment(const ExperimentConfig& cfg_in, const Log& log) {
  ExperimentConfig cfg = cfg_in;
  cfg.doppler = true;
  cfg.validate();
  require(!cfg.scnr_grid_db.empty(), "Doppler experiment needs a non-empty SCNR grid");
  const Pipeline p(cfg, cfg.site, scene_seed(cfg.site, cfg.seed));
  const std::size_t n_train = cfg.train_count(cfg.num_samples);
  CsvTable t;
  t.header = {"scnr", "err_cnn", "err_namf", "err_ls_v", "err_namf_v", "err_cnn_v", "err_ls_theta"};
  ExperimentOutput out;
  for (std::size_t i = 0; i < cfg.scnr_grid_db.size(); ++i) {
    const double s = cfg.scnr_grid_db[i];
    const auto cal = p.calibrate(s, stream_seed(cfg.seed, "doppler-calibrate", i));
    const auto gen = p.generate(cfg.num_samples, cal.gain, s,
                                stream_seed(cfg.seed, "doppler-dataset", i), n_train, n_train);
    auto r = train_and_evaluate(cfg, gen, gen.data.train_split(), "doppler", i, log);
    const auto& e = r.summary;
    t.add({s, e.err_cnn, e.err_namf, e.err_ls_v, e.err_namf_v, e.err_cnn_v, e.err_ls_theta});
    say(log, "doppler scnr " + fmt(s) + " dB: cnn " + fmt(e.err_cnn) + " m, namf " +
                 fmt(e.err_namf) + " m, ls_v " + fmt(e.err_ls_v) + " m/s");
    out.checkpoints.emplace_back("doppler_" + std::to_string(i) + ".rlnn",
                                 nn::save_checkpoint(r.model));
  }
  out.tables.emplace_back("doppler.csv", std::move(t));
  return out;
}

// ---------------------------------------------------------------- mismatch and FSL

namespace {

const std::vector<ScenarioId> kAllScenarios{ScenarioId::O, ScenarioId::N, ScenarioId::W,
                                            ScenarioId::S, ScenarioId::E};

struct TestScenario {
  std::unique_ptr<Pipeline> pipeline;
  double gain = 0.0;
  GeneratedSet test;
  double chordal = 0.0;
};

struct MismatchState {
  nn::CnnModel model;
  std::map<ScenarioId, TestScenario> scenarios;
};

MismatchState prepare_mismatch(const ExperimentConfig& cfg, const Log& log) {
  cfg.validate();
  require(cfg.site.scenario_id == ScenarioId::O, "mismatch training runs on the original scenario");
  MismatchState st;
  const RadarSiteConfig origin = cfg.site;
  const std::size_t n_train = cfg.train_count(cfg.num_samples);
  const std::size_t n_test = cfg.num_samples - n_train;

  for (ScenarioId id : kAllScenarios) {
    TestScenario ts;
    const RadarSiteConfig site = id == ScenarioId::O ? origin : displace_scenario(origin, id);
    ts.pipeline = std::make_unique<Pipeline>(cfg, site, scene_seed(site, cfg.seed));
    ts.gain = ts.pipeline->calibrate(cfg.mismatch_scnr_db,
                                     stream_seed(cfg.seed, "mismatch-calibrate", scenario_key(id)))
                  .gain;
    st.scenarios.emplace(id, std::move(ts));
  }

  const Pipeline& po = *st.scenarios.at(ScenarioId::O).pipeline;
  const auto train_gen = po.generate(cfg.num_samples, st.scenarios.at(ScenarioId::O).gain,
                                     cfg.mismatch_scnr_db, stream_seed(cfg.seed, "mismatch-dataset", 0),
                                     n_train, cfg.num_samples);
  st.model = build_model_for(po.grid(), stream_seed(cfg.seed, "mismatch-model", 0));
  const auto hist = nn::train(st.model, train_gen.data.train_split(), train_gen.data.validation_split(),
                              po.grid(), train_config_for(cfg.train, cfg.seed, "mismatch-train", 0));
  say(log, "mismatch: trained on O for " + std::to_string(hist.train_loss.size()) + " epochs");

  const auto u_o = analysis::clutter_subspace(analysis::pooled_covariance(po.synthesizer()),
                                              po.synthesizer().scene().noise_power, ScenarioId::O);
  for (ScenarioId id : kAllScenarios) {
    TestScenario& ts = st.scenarios.at(id);
    ts.test = ts.pipeline->generate(n_test, ts.gain, cfg.mismatch_scnr_db,
                                    stream_seed(cfg.seed, "mismatch-test", scenario_key(id)), 0, 0);
    const auto u = analysis::clutter_subspace(
        analysis::pooled_covariance(ts.pipeline->synthesizer()),
        ts.pipeline->synthesizer().scene().noise_power, id);
    ts.chordal = analysis::chordal_distance(u_o, u);
  }
  return st;
}

/// Evaluates `model` on a scenario's test set; predictions are mapped back
/// through the scenario's own grid extent.
ErrorSummary evaluate_on(nn::CnnModel& model, const TestScenario& ts) {
  const auto& d = ts.test.data;
  const auto cnn = nn::predict_denormalized(model, std::span<const namf::HeatmapSample>(d.samples),
                                            ts.pipeline->grid());
  return summarize(d.samples, ts.test.peak, ts.test.local, cnn);
}

CsvTable diagnostics(const analysis::MismatchReport& rep) {
  CsvTable t;
  t.header = {"metric", "value"};
  t.add({std::string("spearman_gain_vs_chordal"), rep.rank_correlation});
  return t;
}

}  // namespace

ExperimentOutput run_mismatch_experiment(const ExperimentConfig& cfg, const Log& log) {
  auto st = prepare_mismatch(cfg, log);
  std::map<ScenarioId, double> e_cnn, e_namf, dist;
  std::map<ScenarioId, ErrorSummary> sums;
  for (ScenarioId id : kAllScenarios) {
    const auto& ts = st.scenarios.at(id);
    sums[id] = evaluate_on(st.model, ts);
    e_cnn[id] = sums[id].err_cnn;
    e_namf[id] = sums[id].err_namf;
    dist[id] = ts.chordal;
  }
  const auto rep = analysis::mismatch_report(kAllScenarios, e_cnn, e_namf, dist);
  CsvTable t;
  t.header = {"scenario", "err_cnn", "err_namf", "err_ls_theta", "gain", "chordal",
              "err_cnn_theta", "err_namf_theta"};
  for (const auto& row : rep.rows) {
    const auto& s = sums.at(row.scenario);
    t.add({std::string(1, scenario_char(row.scenario)), row.err_cnn, row.err_baseline,
           s.err_ls_theta, row.gain, row.chordal, s.err_cnn_theta, s.err_namf_theta});
    say(log, std::string("mismatch ") + scenario_char(row.scenario) + ": cnn " + fmt(row.err_cnn) +
                 " m, namf " + fmt(row.err_baseline) + " m, chordal " + fmt(row.chordal));
  }
  ExperimentOutput out;
  out.tables.emplace_back("mismatch.csv", std::move(t));
  out.tables.emplace_back("mismatch_diagnostics.csv", diagnostics(rep));
  out.checkpoints.emplace_back("mismatch_model.rlnn", nn::save_checkpoint(st.model));
  return out;
}

ExperimentOutput run_fsl_experiment(const ExperimentConfig& cfg, const Log& log) {
  auto st = prepare_mismatch(cfg, log);
  const std::vector<ScenarioId> displaced{ScenarioId::N, ScenarioId::W, ScenarioId::S, ScenarioId::E};
  std::map<ScenarioId, double> e_cnn, e_namf, dist, e_before;
  std::map<ScenarioId, ErrorSummary> sums;
  ExperimentOutput out;
  for (ScenarioId id : displaced) {
    const auto& ts = st.scenarios.at(id);
    e_before[id] = evaluate_on(st.model, ts).err_cnn;

    nn::CnnModel tuned = st.model;
    tuned.freeze_feature_layers();
    const auto shots = ts.pipeline->generate(cfg.fsl_samples, ts.gain, cfg.mismatch_scnr_db,
                                             stream_seed(cfg.seed, "fsl-dataset", scenario_key(id)),
                                             cfg.fsl_samples, cfg.fsl_samples);
    const auto tc = train_config_for(cfg.fsl_train, cfg.seed, "fsl-train", scenario_key(id));
    nn::train(tuned, shots.data.train_split(), {}, ts.pipeline->grid(), tc);

    sums[id] = evaluate_on(tuned, ts);
    e_cnn[id] = sums[id].err_cnn;
    e_namf[id] = sums[id].err_namf;
    dist[id] = ts.chordal;
    out.checkpoints.emplace_back(std::string("fsl_") + scenario_char(id) + ".rlnn",
                                 nn::save_checkpoint(tuned));
    say(log, std::string("fsl ") + scenario_char(id) + ": cnn " + fmt(e_before[id]) + " -> " +
                 fmt(e_cnn[id]) + " m");
  }
  // The unadapted model, so frozen tensors can be compared after fine-tuning.
  out.checkpoints.emplace_back("fsl_base.rlnn", nn::save_checkpoint(st.model));
  const auto rep = analysis::mismatch_report(displaced, e_cnn, e_namf, dist);
  CsvTable t;
  t.header = {"scenario", "err_cnn", "err_namf", "err_ls_theta", "gain", "chordal",
              "err_cnn_unadapted"};
  for (const auto& row : rep.rows) {
    t.add({std::string(1, scenario_char(row.scenario)), row.err_cnn, row.err_baseline,
           sums.at(row.scenario).err_ls_theta, row.gain, row.chordal, e_before.at(row.scenario)});
  }
  out.tables.emplace_back("fsl.csv", std::move(t));
  out.tables.emplace_back("fsl_diagnostics.csv", diagnostics(rep));
  return out;
}

ExperimentOutput run_experiment(const std::string& tag, const ExperimentConfig& cfg, const Log& log) {
  const std::string t = canonical_experiment(tag);
  if (t == "threshold") return run_threshold_experiment(cfg, log);
  if (t == "sweep-scnr") return run_scnr_sweep(cfg, log);
  if (t == "sweep-size") return run_size_sweep(cfg, log);
  if (t == "mismatch") return run_mismatch_experiment(cfg, log);
  if (t == "fsl") return run_fsl_experiment(cfg, log);
  if (t == "doppler") return run_doppler_experiment(cfg, log);
  fail(ErrorCode::kInvalidArgument, "'" + tag + "' is not an experiment");
}

}  // namespace radloc::experiments
