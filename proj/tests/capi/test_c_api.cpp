// SPDX-License-Identifier: Apache-2.0
// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "radloc/radloc.h"

namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("radloc_capi_" + name);
  fs::remove_all(p);
  return p;
}

radloc_config_t tiny_config(const char* experiment) {
  const auto p = fs::temp_directory_path() / "radloc_capi_tiny.json";
  std::ofstream(p) << R"({"num_samples": 30, "threshold_samples": 10, "scnr_grid_db": [-10, 20],
    "realizations_grid": [100], "train": {"epochs": 2, "batch_size": 8}, "deterministic": true})";
  radloc_config_t c = nullptr;
  EXPECT_EQ(radloc_config_load(p.string().c_str(), experiment, &c), RADLOC_OK) << radloc_last_error();
  return c;
}

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_STREQ(radloc_version(), "1.0.0");
  EXPECT_STREQ(radloc_status_string(RADLOC_OK), "ok");
  EXPECT_GT(std::strlen(radloc_status_string(RADLOC_E_FORMAT)), 0u);
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(radloc_config_create("fsl", nullptr), RADLOC_E_INVALID_ARGUMENT);
  EXPECT_EQ(radloc_config_set_seed(nullptr, 1), RADLOC_E_INVALID_ARGUMENT);
  EXPECT_EQ(radloc_dataset_save(nullptr, "x"), RADLOC_E_INVALID_ARGUMENT);
  double thr = 0;
  EXPECT_EQ(radloc_breakdown_threshold(1, 16, 100, nullptr), RADLOC_E_INVALID_ARGUMENT);
  EXPECT_EQ(radloc_breakdown_threshold(1, 16, 100, &thr), RADLOC_OK);
  radloc_config_destroy(nullptr);
  radloc_dataset_destroy(nullptr);
  radloc_model_destroy(nullptr);
}

TEST(CApi, BreakdownThreshold) {
  double thr = 0;
  ASSERT_EQ(radloc_breakdown_threshold(1, 16, 100, &thr), RADLOC_OK);
  EXPECT_NEAR(thr, 10 * std::log10(std::sqrt(16.0 / 100.0)), 1e-12);
  EXPECT_EQ(radloc_breakdown_threshold(0, 16, 100, &thr), RADLOC_E_INVALID_ARGUMENT);
}

TEST(CApi, ErrorsSetLastError) {
  radloc_config_t c = nullptr;
  EXPECT_EQ(radloc_config_create("nonsense", &c), RADLOC_E_INVALID_ARGUMENT);
  EXPECT_EQ(c, nullptr);
  EXPECT_NE(std::string(radloc_last_error()).find("nonsense"), std::string::npos);
  EXPECT_EQ(radloc_config_load("/nonexistent.json", nullptr, &c), RADLOC_E_IO);
  radloc_dataset_t d = nullptr;
  EXPECT_EQ(radloc_dataset_load("/nonexistent.rlhm", &d), RADLOC_E_IO);
}

TEST(CApi, ConfigSettersAndJson) {
  radloc_config_t c = nullptr;
  ASSERT_EQ(radloc_config_create("sweep-scnr", &c), RADLOC_OK);
  EXPECT_EQ(radloc_config_set_seed(c, 42), RADLOC_OK);
  EXPECT_EQ(radloc_config_set_scenario(c, 'W'), RADLOC_OK);
  EXPECT_EQ(radloc_config_set_scenario(c, 'Q'), RADLOC_E_INVALID_ARGUMENT);
  EXPECT_EQ(radloc_config_set_deterministic(c, 1), RADLOC_OK);
  EXPECT_EQ(radloc_config_set_output(c, "results"), RADLOC_OK);
  EXPECT_STREQ(radloc_config_output(c), "results");

  std::size_t len = 0;
  EXPECT_EQ(radloc_config_to_json(c, nullptr, 0, &len), RADLOC_OK);
  ASSERT_GT(len, 0u);
  std::string buf(len + 1, '\0');
  ASSERT_EQ(radloc_config_to_json(c, buf.data(), buf.size(), &len), RADLOC_OK);
  buf.resize(len);
  EXPECT_NE(buf.find("\"seed\": 42"), std::string::npos) << buf;
  EXPECT_NE(buf.find("\"deterministic\": true"), std::string::npos);
  radloc_config_destroy(c);
}

TEST(CApi, GenerateTrainEvaluateRoundTrip) {
  radloc_config_t c = tiny_config("generate");
  ASSERT_NE(c, nullptr);
  radloc_dataset_t d = nullptr;
  ASSERT_EQ(radloc_generate(c, &d, nullptr, nullptr), RADLOC_OK) << radloc_last_error();
  radloc_dataset_info info{};
  ASSERT_EQ(radloc_dataset_info_get(d, &info), RADLOC_OK);
  EXPECT_EQ(info.count, 30u);
  EXPECT_EQ(info.n_train, 27u);
  EXPECT_EQ(info.ndims, 2u);
  EXPECT_EQ(info.dims[0], 5u);
  EXPECT_EQ(info.dims[1], 26u);
  EXPECT_EQ(info.scenario, 'O');

  const auto dir = scratch("roundtrip");
  fs::create_directories(dir);
  const auto ds_path = (dir / "d.rlhm").string();
  ASSERT_EQ(radloc_dataset_save(d, ds_path.c_str()), RADLOC_OK);
  radloc_dataset_t d2 = nullptr;
  ASSERT_EQ(radloc_dataset_load(ds_path.c_str(), &d2), RADLOC_OK);
  const auto ds_path2 = (dir / "d2.rlhm").string();
  ASSERT_EQ(radloc_dataset_save(d2, ds_path2.c_str()), RADLOC_OK);
  EXPECT_EQ(fs::file_size(ds_path), fs::file_size(ds_path2));

  int lines = 0;
  auto count = [](const char*, void* user) { ++*static_cast<int*>(user); };
  radloc_model_t m = nullptr;
  const auto hist = (dir / "history.csv").string();
  ASSERT_EQ(radloc_train(c, d2, hist.c_str(), &m, count, &lines), RADLOC_OK) << radloc_last_error();
  EXPECT_GT(lines, 0);
  EXPECT_TRUE(fs::exists(hist));
  std::uint64_t trainable = 0;
  ASSERT_EQ(radloc_model_count_trainable(m, &trainable), RADLOC_OK);
  EXPECT_EQ(trainable, 12942u);

  const auto model_path = (dir / "m.rlnn").string();
  ASSERT_EQ(radloc_model_save(m, model_path.c_str()), RADLOC_OK);
  radloc_model_t m2 = nullptr;
  ASSERT_EQ(radloc_model_load(model_path.c_str(), &m2), RADLOC_OK);

  radloc_evaluation a{}, b{}, plain{};
  ASSERT_EQ(radloc_evaluate(c, d2, m, nullptr, &a), RADLOC_OK) << radloc_last_error();
  ASSERT_EQ(radloc_evaluate(c, d2, m2, (dir / "eval.csv").string().c_str(), &b), RADLOC_OK);
  ASSERT_EQ(radloc_evaluate(c, d2, nullptr, nullptr, &plain), RADLOC_OK);
  EXPECT_EQ(a.count, 3u);
  EXPECT_EQ(a.err_cnn, b.err_cnn);
  EXPECT_EQ(a.err_namf, plain.err_namf);
  EXPECT_TRUE(std::isnan(plain.err_cnn));
  EXPECT_TRUE(fs::exists(dir / "eval.csv"));

  // Array and grid settings come from the dataset, not the config.
  radloc_config_t dc = nullptr;
  ASSERT_EQ(radloc_config_create("doppler", &dc), RADLOC_OK);
  radloc_evaluation other{};
  ASSERT_EQ(radloc_evaluate(dc, d2, nullptr, nullptr, &other), RADLOC_OK) << radloc_last_error();
  EXPECT_EQ(other.err_namf, plain.err_namf);
  EXPECT_EQ(other.err_ls_theta, plain.err_ls_theta);

  radloc_config_destroy(dc);
  radloc_model_destroy(m2);
  radloc_model_destroy(m);
  radloc_dataset_destroy(d2);
  radloc_dataset_destroy(d);
  radloc_config_destroy(c);
  fs::remove_all(dir);
}

TEST(CApi, CorruptFilesGiveFormatErrors) {
  const auto dir = scratch("corrupt");
  fs::create_directories(dir);
  const auto p = (dir / "junk.bin").string();
  std::ofstream(p) << "not a radloc file";
  radloc_dataset_t d = nullptr;
  radloc_model_t m = nullptr;
  EXPECT_EQ(radloc_dataset_load(p.c_str(), &d), RADLOC_E_FORMAT);
  EXPECT_EQ(radloc_model_load(p.c_str(), &m), RADLOC_E_FORMAT);
  EXPECT_EQ(d, nullptr);
  EXPECT_EQ(m, nullptr);
  fs::remove_all(dir);
}

TEST(CApi, RunExperimentWritesCsv) {
  radloc_config_t c = tiny_config("threshold");
  const auto dir = scratch("threshold");
  ASSERT_EQ(radloc_run_experiment(c, "threshold", dir.string().c_str(), nullptr, nullptr), RADLOC_OK)
      << radloc_last_error();
  EXPECT_TRUE(fs::exists(dir / "threshold.csv"));
  EXPECT_EQ(radloc_run_experiment(c, "nope", dir.string().c_str(), nullptr, nullptr),
            RADLOC_E_INVALID_ARGUMENT);
  radloc_config_destroy(c);
  fs::remove_all(dir);
}

}  // namespace
