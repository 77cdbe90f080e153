// SPDX-License-Identifier: Apache-2.0
#include "radloc/radloc.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "radloc/experiments.hpp"
#include "radloc/nn/checkpoint.hpp"

struct radloc_config_s {
  radloc::experiments::ExperimentConfig cfg;
};

struct radloc_dataset_s {
  radloc::experiments::Dataset data;
};

struct radloc_model_s {
  radloc::nn::CnnModel model;
};

namespace {

using namespace radloc;

thread_local std::string g_last_error;

radloc_status to_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidArgument: return RADLOC_E_INVALID_ARGUMENT;
    case ErrorCode::kSingular: return RADLOC_E_SINGULAR;
    case ErrorCode::kNumerical: return RADLOC_E_NUMERICAL;
    case ErrorCode::kIo: return RADLOC_E_IO;
    case ErrorCode::kFormat: return RADLOC_E_FORMAT;
    case ErrorCode::kState: return RADLOC_E_STATE;
  }
  return RADLOC_E_INTERNAL;
}

template <typename F>
radloc_status try_(F&& f) {
  g_last_error.clear();
  try {
    f();
    return RADLOC_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RADLOC_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RADLOC_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return RADLOC_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

experiments::Log make_log(radloc_log_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](const std::string& m) { fn(m.c_str(), user); };
}

}  // namespace

extern "C" {

const char* radloc_version(void) { return "1.0.0"; }

const char* radloc_status_string(radloc_status s) {
  switch (s) {
    case RADLOC_OK: return "ok";
    case RADLOC_E_INVALID_ARGUMENT: return "invalid argument";
    case RADLOC_E_SINGULAR: return "singular matrix";
    case RADLOC_E_NUMERICAL: return "numerical failure";
    case RADLOC_E_IO: return "I/O failure";
    case RADLOC_E_FORMAT: return "malformed file";
    case RADLOC_E_STATE: return "invalid state";
    case RADLOC_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* radloc_last_error(void) { return g_last_error.c_str(); }

radloc_status radloc_config_create(const char* experiment, radloc_config_t* out) {
  return try_([&] {
    need(experiment, "experiment");
    need(out, "out");
    *out = new radloc_config_s{experiments::ExperimentConfig::defaults_for(experiment)};
  });
}

radloc_status radloc_config_load(const char* json_path, const char* experiment,
                                 radloc_config_t* out) {
  return try_([&] {
    need(json_path, "path");
    need(out, "out");
    *out = new radloc_config_s{
        experiments::load_config(json_path, experiment ? experiment : "sweep-scnr")};
  });
}

void radloc_config_destroy(radloc_config_t config) { delete config; }

radloc_status radloc_config_set_seed(radloc_config_t config, uint64_t seed) {
  return try_([&] {
    need(config, "config");
    config->cfg.seed = seed;
  });
}

radloc_status radloc_config_set_scenario(radloc_config_t config, char scenario) {
  return try_([&] {
    need(config, "config");
    config->cfg.site = site_for(parse_scenario_id(std::string(1, scenario)));
  });
}

radloc_status radloc_config_set_deterministic(radloc_config_t config, int on) {
  return try_([&] {
    need(config, "config");
    config->cfg.deterministic = on != 0;
  });
}

radloc_status radloc_config_set_output(radloc_config_t config, const char* dir) {
  return try_([&] {
    need(config, "config");
    need(dir, "dir");
    config->cfg.output = dir;
  });
}

const char* radloc_config_output(radloc_config_t config) {
  return config ? config->cfg.output.c_str() : "";
}

radloc_status radloc_config_to_json(radloc_config_t config, char* buffer, size_t capacity,
                                    size_t* length) {
  return try_([&] {
    need(config, "config");
    const std::string s = nlohmann::json(config->cfg).dump(2);
    if (length) *length = s.size();
    if (buffer && capacity > 0) {
      const std::size_t n = std::min(capacity - 1, s.size());
      std::memcpy(buffer, s.data(), n);
      buffer[n] = '\0';
    }
  });
}

radloc_status radloc_run_experiment(radloc_config_t config, const char* experiment,
                                    const char* out_dir, radloc_log_fn log, void* user) {
  return try_([&] {
    need(config, "config");
    need(experiment, "experiment");
    const auto out = experiments::run_experiment(experiment, config->cfg, make_log(log, user));
    out.write(out_dir ? out_dir : config->cfg.output);
  });
}

radloc_status radloc_generate(radloc_config_t config, radloc_dataset_t* out, radloc_log_fn log,
                              void* user) {
  return try_([&] {
    need(config, "config");
    need(out, "out");
    auto gen = experiments::generate_dataset(config->cfg, make_log(log, user));
    *out = new radloc_dataset_s{std::move(gen.data)};
  });
}

radloc_status radloc_dataset_load(const char* path, radloc_dataset_t* out) {
  return try_([&] {
    need(path, "path");
    need(out, "out");
    *out = new radloc_dataset_s{experiments::read_dataset_file(path)};
  });
}

radloc_status radloc_dataset_save(radloc_dataset_t dataset, const char* path) {
  return try_([&] {
    need(dataset, "dataset");
    need(path, "path");
    experiments::write_dataset_file(dataset->data, path);
  });
}

radloc_status radloc_dataset_info_get(radloc_dataset_t dataset, radloc_dataset_info* info) {
  return try_([&] {
    need(dataset, "dataset");
    need(info, "info");
    const auto& d = dataset->data;
    *info = radloc_dataset_info{};
    info->count = d.samples.size();
    info->n_train = d.n_train;
    const auto dims = d.grid.shape();
    info->ndims = static_cast<uint32_t>(dims.size());
    for (std::size_t i = 0; i < dims.size() && i < 3; ++i) info->dims[i] = dims[i];
    info->scenario = scenario_char(d.scenario);
    info->mean_output_scnr_db = d.mean_output_scnr_db;
    info->gain = d.gain;
  });
}

void radloc_dataset_destroy(radloc_dataset_t dataset) { delete dataset; }

radloc_status radloc_train(radloc_config_t config, radloc_dataset_t dataset,
                           const char* history_csv, radloc_model_t* out, radloc_log_fn log,
                           void* user) {
  return try_([&] {
    need(config, "config");
    need(dataset, "dataset");
    need(out, "out");
    const auto& cfg = config->cfg;
    nn::TrainConfig tc = cfg.train;
    tc.seed = experiments::stream_seed(derive_seed(cfg.seed, cfg.train.seed), "train", 0);
    nn::TrainHistory h;
    auto m = experiments::train_on(dataset->data, tc, experiments::stream_seed(cfg.seed, "model", 0),
                                   &h, make_log(log, user));
    if (history_csv) {
      experiments::CsvTable t;
      t.header = {"epoch", "train_loss", "val_loss"};
      for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
        t.add({static_cast<std::int64_t>(e), h.train_loss[e],
               e < h.val_loss.size() ? h.val_loss[e] : NAN});
      }
      t.write(history_csv);
    }
    *out = new radloc_model_s{std::move(m)};
  });
}

radloc_status radloc_model_load(const char* path, radloc_model_t* out) {
  return try_([&] {
    need(path, "path");
    need(out, "out");
    *out = new radloc_model_s{nn::load_checkpoint_file(path)};
  });
}

radloc_status radloc_model_save(radloc_model_t model, const char* path) {
  return try_([&] {
    need(model, "model");
    need(path, "path");
    nn::save_checkpoint_file(model->model, path);
  });
}

radloc_status radloc_model_count_trainable(radloc_model_t model, uint64_t* count) {
  return try_([&] {
    need(model, "model");
    need(count, "count");
    *count = model->model.count_trainable();
  });
}

void radloc_model_destroy(radloc_model_t model) { delete model; }

radloc_status radloc_evaluate(radloc_config_t config, radloc_dataset_t dataset,
                              radloc_model_t model, const char* csv_path,
                              radloc_evaluation* result) {
  return try_([&] {
    need(config, "config");
    need(dataset, "dataset");
    const auto s = experiments::evaluate_dataset(config->cfg, dataset->data,
                                                 model ? &model->model : nullptr);
    if (result) {
      *result = radloc_evaluation{s.count,    s.err_namf, s.err_namf_theta, s.err_ls_theta,
                                  s.err_namf_v, s.err_ls_v, s.err_cnn,      s.err_cnn_theta,
                                  s.err_cnn_v};
    }
    if (csv_path) {
      experiments::CsvTable t;
      t.header = {"count",    "err_namf", "err_namf_theta", "err_ls_theta", "err_cnn",
                  "err_cnn_theta", "err_namf_v", "err_ls_v",   "err_cnn_v"};
      t.add({static_cast<std::int64_t>(s.count), s.err_namf, s.err_namf_theta, s.err_ls_theta,
             s.err_cnn, s.err_cnn_theta, s.err_namf_v, s.err_ls_v, s.err_cnn_v});
      t.write(csv_path);
    }
  });
}

radloc_status radloc_breakdown_threshold(int pulses, int subarrays, int realizations,
                                         double* threshold_db) {
  return try_([&] {
    need(threshold_db, "threshold_db");
    *threshold_db = namf::breakdown_threshold(pulses, subarrays, realizations);
  });
}

}  // extern "C"
