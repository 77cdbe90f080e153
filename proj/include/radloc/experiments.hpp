// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "radloc/analysis.hpp"
#include "radloc/config.hpp"
#include "radloc/estimators.hpp"
#include "radloc/namf.hpp"
#include "radloc/nn/model.hpp"
#include "radloc/nn/train.hpp"
#include "radloc/scenario.hpp"

namespace radloc::experiments {

// ---------------------------------------------------------------- config

struct ExperimentConfig {
  std::string experiment = "sweep-scnr";
  RadarSiteConfig site = original_site();

  int pulses = 1;
  int subarrays = 16;
  int realizations = 100;
  std::size_t num_samples = 10000;
  std::uint64_t seed = 1;

  double scnr_db = 20.0;
  std::vector<double> scnr_grid_db{-20, -15, -10, -5, 0, 5, 10, 15, 20};
  std::vector<int> realizations_grid{100, 500};
  std::size_t threshold_samples = 1000;
  std::vector<std::size_t> size_grid{1000, 2000, 5000, 10000};
  double mismatch_scnr_db = 20.0;
  std::size_t fsl_samples = 64;

  int patches_per_bin = 32;
  double rcs_mean_dbsm = 0.0;
  double rcs_spread_dbsm = 10.0;
  double delta_theta_deg = 0.4;
  bool doppler = false;
  scenario::VelocityInterval velocity{};
  double delta_v_mps = 0.5;
  int calibration_trials = 100;
  double train_fraction = 0.9;

  nn::TrainConfig train{};
  nn::TrainConfig fsl_train{};

  std::string output = "out";
  bool deterministic = false;

  /// Desk-scale defaults for an experiment tag (the Doppler case switches to
  /// four pulses, 400 realizations and a smaller N).
  static ExperimentConfig defaults_for(const std::string& experiment);

  void validate() const;
  std::size_t train_count(std::size_t n) const;
  scenario::TargetDistribution target_law() const;
  namf::HeatmapGrid grid_for(const RadarSiteConfig& site) const;
  unsigned threads() const;
};

/// Canonical experiment tag ("sweep-scnr", ...); accepts the underscore
/// spellings too.
std::string canonical_experiment(const std::string& tag);

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Starts from defaults_for(j["experiment"]) (or the fallback tag when the
/// key is absent) and applies every present key.
ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& fallback_experiment);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path,
                             const std::string& fallback_experiment = "sweep-scnr");

/// Independent stream seed for a labelled purpose.
std::uint64_t stream_seed(std::uint64_t base, std::string_view label, std::uint64_t index = 0);

// ---------------------------------------------------------------- datasets

inline constexpr std::uint32_t kDatasetVersion = 1;

/// In-memory image of an "RLHM" dataset file. Tensor values are held at
/// float32 precision so in-memory and on-disk pipelines agree.
struct Dataset {
  ScenarioId scenario = ScenarioId::O;
  std::uint64_t seed = 0;        // sample i uses derive_seed(seed, i)
  std::uint64_t scene_seed = 0;  // clutter scene
  std::size_t n_train = 0;       // samples [0, n_train) train, the rest validate
  int pulses = 1;
  int subarrays = 16;
  int realizations = 100;
  double gain = 1.0;
  double mean_output_scnr_db = 0.0;
  namf::HeatmapGrid grid;
  std::vector<namf::HeatmapSample> samples;

  std::span<const namf::HeatmapSample> train_split() const {
    return {samples.data(), n_train};
  }
  std::span<const namf::HeatmapSample> validation_split() const {
    return {samples.data() + n_train, samples.size() - n_train};
  }
  std::size_t label_dim() const { return grid.doppler() ? 3 : 2; }
};

std::vector<std::uint8_t> write_dataset(const Dataset& d);
Dataset read_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset_file(const Dataset& d, const std::string& path);
Dataset read_dataset_file(const std::string& path);

// ---------------------------------------------------------------- pipeline

/// Peak and local-search estimates gathered alongside a dataset.
struct GeneratedSet {
  Dataset data;
  std::vector<estimators::Estimate> peak;
  /// Local-search estimates for samples at or after `local_from`.
  std::vector<std::optional<estimators::Estimate>> local;
};

/// Scene, synthesizer, grid and steering table of one site.
class Pipeline {
 public:
  Pipeline(const ExperimentConfig& cfg, const RadarSiteConfig& site, std::uint64_t scene_seed);

  const namf::HeatmapGrid& grid() const { return grid_; }
  const scenario::ReturnSynthesizer& synthesizer() const { return synth_; }
  const RadarSiteConfig& site() const { return site_; }
  std::uint64_t scene_seed() const { return scene_seed_; }

  scenario::GainCalibration calibrate(double scnr_db, std::uint64_t seed) const;

  struct Draw {
    scenario::TargetSpec target;
    scenario::RadarReturnSet returns;
    namf::HeatmapSample sample;
  };
  /// One placement, its returns and its (float32-quantized) heatmap.
  Draw draw(double gain, std::uint64_t sample_seed) const;

  /// `n` samples from `dataset_seed`; local search runs for indices
  /// >= local_from.
  GeneratedSet generate(std::size_t n, double gain, double scnr_db, std::uint64_t dataset_seed,
                        std::size_t n_train, std::size_t local_from) const;

  /// Local-search estimates for dataset samples [from, end), re-synthesizing
  /// each placement from its seed. Fails if a regenerated label does not
  /// match the stored one.
  std::vector<estimators::Estimate> local_search_for(const Dataset& d, std::size_t from) const;

 private:
  ExperimentConfig cfg_;
  RadarSiteConfig site_;
  std::uint64_t scene_seed_;
  scenario::ReturnSynthesizer synth_;
  namf::HeatmapGrid grid_;
  namf::SteeringTable table_;
  scenario::TargetDistribution law_;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Exceptions are
/// rethrown for the lowest failing index with the index attached.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------- evaluation

struct ErrorSummary {
  std::size_t count = 0;
  double err_namf = 0.0;        // Cartesian, peak cell midpoint
  double err_namf_theta = 0.0;
  double err_ls_theta = 0.0;    // NaN when no local search was run
  double err_namf_v = 0.0;      // Doppler only
  double err_ls_v = 0.0;
  double err_cnn = 0.0;         // NaN when no CNN estimates were given
  double err_cnn_theta = 0.0;
  double err_cnn_v = 0.0;
};

/// Mean Euclidean errors of each estimator over `samples`.
ErrorSummary summarize(std::span<const namf::HeatmapSample> samples,
                       std::span<const estimators::Estimate> peak,
                       std::span<const std::optional<estimators::Estimate>> local,
                       std::span<const estimators::Estimate> cnn);

/// Maps a label from one grid's extent to the same normalized position in
/// another grid's extent.
namf::Label remap_label(const namf::Label& label, const namf::HeatmapGrid& from,
                        const namf::HeatmapGrid& to);

/// SCNR at the steepest descent of the error curve: midpoint of the
/// consecutive pair with the largest (err_i - err_{i+1}) / (s_{i+1} - s_i).
double max_slope_point(std::span<const double> scnr_db, std::span<const double> err);

// ---------------------------------------------------------------- CSV

struct CsvTable {
  using Cell = std::variant<double, std::int64_t, std::string>;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
  /// Header row, then one line per row; reals at 6 significant digits.
  std::string str() const;
  void write(const std::string& path) const;
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

std::string format_real(double v);

// ---------------------------------------------------------------- experiments

using Log = std::function<void(const std::string&)>;

struct ExperimentOutput {
  std::vector<std::pair<std::string, CsvTable>> tables;  // file name, table
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> checkpoints;

  const CsvTable& table(const std::string& name) const;
  /// Writes every table and checkpoint under `dir` (created if missing).
  void write(const std::string& dir) const;
};

GeneratedSet generate_dataset(const ExperimentConfig& cfg, const Log& log = {});
nn::CnnModel build_model_for(const namf::HeatmapGrid& grid, std::uint64_t seed);
/// Trains on the dataset's train split, selecting on its validation split.
nn::CnnModel train_on(const Dataset& d, const nn::TrainConfig& tc, std::uint64_t model_seed,
                      nn::TrainHistory* history = nullptr, const Log& log = {});
/// Errors on the validation split; local search is recomputed from seeds.
ErrorSummary evaluate_dataset(const ExperimentConfig& cfg, const Dataset& d,
                              nn::CnnModel* model);

ExperimentOutput run_threshold_experiment(const ExperimentConfig& cfg, const Log& log = {});
ExperimentOutput run_scnr_sweep(const ExperimentConfig& cfg, const Log& log = {});
ExperimentOutput run_size_sweep(const ExperimentConfig& cfg, const Log& log = {});
ExperimentOutput run_mismatch_experiment(const ExperimentConfig& cfg, const Log& log = {});
ExperimentOutput run_fsl_experiment(const ExperimentConfig& cfg, const Log& log = {});
ExperimentOutput run_doppler_experiment(const ExperimentConfig& cfg, const Log& log = {});

/// Dispatches on a canonical experiment tag.
ExperimentOutput run_experiment(const std::string& tag, const ExperimentConfig& cfg,
                                const Log& log = {});

}  // namespace radloc::experiments
