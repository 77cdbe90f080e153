/* SPDX-License-Identifier: Apache-2.0 */
#ifndef RADLOC_RADLOC_H_
#define RADLOC_RADLOC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(RADLOC_BUILDING_LIBRARY)
#define RADLOC_API __declspec(dllexport)
#else
#define RADLOC_API __declspec(dllimport)
#endif
#else
#define RADLOC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum radloc_status {
  RADLOC_OK = 0,
  RADLOC_E_INVALID_ARGUMENT = 1,
  RADLOC_E_SINGULAR = 2,
  RADLOC_E_NUMERICAL = 3,
  RADLOC_E_IO = 4,
  RADLOC_E_FORMAT = 5,
  RADLOC_E_STATE = 6,
  RADLOC_E_INTERNAL = 99
} radloc_status;

typedef struct radloc_config_s* radloc_config_t;
typedef struct radloc_dataset_s* radloc_dataset_t;
typedef struct radloc_model_s* radloc_model_t;

/* Progress sink; `message` is only valid during the call. */
typedef void (*radloc_log_fn)(const char* message, void* user);

RADLOC_API const char* radloc_version(void);
RADLOC_API const char* radloc_status_string(radloc_status status);
/* Message of the last failure on the calling thread ("" if none). */
RADLOC_API const char* radloc_last_error(void);

/* ---- experiment configuration ---- */

/* Desk-scale defaults for an experiment tag such as "sweep-scnr". */
RADLOC_API radloc_status radloc_config_create(const char* experiment, radloc_config_t* out);
/* Reads a JSON config; `experiment` supplies the defaults when the document
 * has no "experiment" key (NULL means "sweep-scnr"). */
RADLOC_API radloc_status radloc_config_load(const char* json_path, const char* experiment,
                                            radloc_config_t* out);
RADLOC_API void radloc_config_destroy(radloc_config_t config);

RADLOC_API radloc_status radloc_config_set_seed(radloc_config_t config, uint64_t seed);
/* One of 'O', 'N', 'W', 'S', 'E'; replaces the site geometry. */
RADLOC_API radloc_status radloc_config_set_scenario(radloc_config_t config, char scenario);
RADLOC_API radloc_status radloc_config_set_deterministic(radloc_config_t config, int on);
RADLOC_API radloc_status radloc_config_set_output(radloc_config_t config, const char* dir);
/* Output directory; owned by the config. */
RADLOC_API const char* radloc_config_output(radloc_config_t config);
/* Writes the effective configuration as JSON into `buffer` (NUL-terminated
 * when it fits); `*length` receives the size without the terminator. */
RADLOC_API radloc_status radloc_config_to_json(radloc_config_t config, char* buffer,
                                               size_t capacity, size_t* length);

/* ---- experiments ---- */

/* Runs threshold, sweep-scnr, sweep-size, mismatch, fsl or doppler and
 * writes its CSVs and checkpoints under `out_dir`. */
RADLOC_API radloc_status radloc_run_experiment(radloc_config_t config, const char* experiment,
                                               const char* out_dir, radloc_log_fn log,
                                               void* user);

/* ---- datasets ---- */

typedef struct radloc_dataset_info {
  uint64_t count;
  uint64_t n_train;
  uint32_t ndims;
  uint64_t dims[3];
  char scenario;
  double mean_output_scnr_db;
  double gain;
} radloc_dataset_info;

RADLOC_API radloc_status radloc_generate(radloc_config_t config, radloc_dataset_t* out,
                                         radloc_log_fn log, void* user);
RADLOC_API radloc_status radloc_dataset_load(const char* path, radloc_dataset_t* out);
RADLOC_API radloc_status radloc_dataset_save(radloc_dataset_t dataset, const char* path);
RADLOC_API radloc_status radloc_dataset_info_get(radloc_dataset_t dataset,
                                                 radloc_dataset_info* info);
RADLOC_API void radloc_dataset_destroy(radloc_dataset_t dataset);

/* ---- models ---- */

/* Trains a fresh network on the dataset's train split. When `history_csv`
 * is non-NULL the per-epoch losses are written there. */
RADLOC_API radloc_status radloc_train(radloc_config_t config, radloc_dataset_t dataset,
                                      const char* history_csv, radloc_model_t* out,
                                      radloc_log_fn log, void* user);
RADLOC_API radloc_status radloc_model_load(const char* path, radloc_model_t* out);
RADLOC_API radloc_status radloc_model_save(radloc_model_t model, const char* path);
RADLOC_API radloc_status radloc_model_count_trainable(radloc_model_t model, uint64_t* count);
RADLOC_API void radloc_model_destroy(radloc_model_t model);

/* ---- evaluation ---- */

/* Mean errors over the validation split. Entries that do not apply are NaN. */
typedef struct radloc_evaluation {
  uint64_t count;
  double err_namf;
  double err_namf_theta;
  double err_ls_theta;
  double err_namf_v;
  double err_ls_v;
  double err_cnn;
  double err_cnn_theta;
  double err_cnn_v;
} radloc_evaluation;

/* `model` may be NULL (classical estimators only). When `csv_path` is
 * non-NULL a one-row CSV is written there. */
RADLOC_API radloc_status radloc_evaluate(radloc_config_t config, radloc_dataset_t dataset,
                                         radloc_model_t model, const char* csv_path,
                                         radloc_evaluation* result);

RADLOC_API radloc_status radloc_breakdown_threshold(int pulses, int subarrays, int realizations,
                                                    double* threshold_db);

#ifdef __cplusplus
}
#endif

#endif /* RADLOC_RADLOC_H_ */
