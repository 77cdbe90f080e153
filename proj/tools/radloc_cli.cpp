// SPDX-License-Identifier: Apache-2.0
// Command-line front end. Links only the C API.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "radloc/radloc.h"

namespace {

struct Failure {
  std::string message;
};

void check(radloc_status s, const std::string& what) {
  if (s == RADLOC_OK) return;
  std::string msg = what + ": " + radloc_status_string(s);
  const std::string detail = radloc_last_error();
  if (!detail.empty()) msg += ": " + detail;
  throw Failure{msg};
}

struct ConfigDeleter {
  void operator()(radloc_config_s* c) const { radloc_config_destroy(c); }
};
struct DatasetDeleter {
  void operator()(radloc_dataset_s* d) const { radloc_dataset_destroy(d); }
};
struct ModelDeleter {
  void operator()(radloc_model_s* m) const { radloc_model_destroy(m); }
};
using Config = std::unique_ptr<radloc_config_s, ConfigDeleter>;
using DatasetHandle = std::unique_ptr<radloc_dataset_s, DatasetDeleter>;
using ModelHandle = std::unique_ptr<radloc_model_s, ModelDeleter>;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "out";
  bool deterministic = false;
  std::string scenario;
  bool quiet = false;
};

void log_line(const char* message, void* user) {
  if (*static_cast<bool*>(user)) return;
  std::fprintf(stderr, "%s\n", message);
}

Config make_config(const Globals& g, const std::string& experiment) {
  radloc_config_t raw = nullptr;
  if (g.config_path.empty()) {
    check(radloc_config_create(experiment.c_str(), &raw), "config");
  } else {
    check(radloc_config_load(g.config_path.c_str(), experiment.c_str(), &raw), "config");
  }
  Config cfg(raw);
  if (g.seed_set) check(radloc_config_set_seed(cfg.get(), g.seed), "--seed");
  if (!g.scenario.empty()) check(radloc_config_set_scenario(cfg.get(), g.scenario[0]), "--scenario");
  if (g.deterministic) check(radloc_config_set_deterministic(cfg.get(), 1), "--deterministic");
  check(radloc_config_set_output(cfg.get(), g.out.c_str()), "--out");
  return cfg;
}

std::string in_out(const Globals& g, const std::string& name) {
  std::filesystem::create_directories(g.out);
  return (std::filesystem::path(g.out) / name).string();
}

DatasetHandle load_dataset(const std::string& path) {
  radloc_dataset_t raw = nullptr;
  check(radloc_dataset_load(path.c_str(), &raw), "dataset " + path);
  return DatasetHandle(raw);
}

void cmd_generate(const Globals& g) {
  auto cfg = make_config(g, "generate");
  bool quiet = g.quiet;
  radloc_dataset_t raw = nullptr;
  check(radloc_generate(cfg.get(), &raw, log_line, &quiet), "generate");
  DatasetHandle ds(raw);
  const std::string path = in_out(g, "dataset.rlhm");
  check(radloc_dataset_save(ds.get(), path.c_str()), "save " + path);
  radloc_dataset_info info{};
  check(radloc_dataset_info_get(ds.get(), &info), "dataset info");
  if (!g.quiet) {
    std::printf("wrote %s: %llu samples (%llu train), mean output SCNR %.3f dB\n", path.c_str(),
                static_cast<unsigned long long>(info.count),
                static_cast<unsigned long long>(info.n_train), info.mean_output_scnr_db);
  }
}

void cmd_train(const Globals& g, const std::string& dataset_path) {
  auto cfg = make_config(g, "train");
  auto ds = load_dataset(dataset_path);
  bool quiet = g.quiet;
  const std::string history = in_out(g, "train_history.csv");
  radloc_model_t raw = nullptr;
  check(radloc_train(cfg.get(), ds.get(), history.c_str(), &raw, log_line, &quiet), "train");
  ModelHandle model(raw);
  const std::string path = in_out(g, "model.rlnn");
  check(radloc_model_save(model.get(), path.c_str()), "save " + path);
  if (!g.quiet) std::printf("wrote %s\n", path.c_str());
}

void cmd_evaluate(const Globals& g, const std::string& dataset_path, const std::string& model_path) {
  auto cfg = make_config(g, "evaluate");
  auto ds = load_dataset(dataset_path);
  ModelHandle model;
  if (!model_path.empty()) {
    radloc_model_t raw = nullptr;
    check(radloc_model_load(model_path.c_str(), &raw), "model " + model_path);
    model.reset(raw);
  }
  const std::string csv = in_out(g, "evaluation.csv");
  radloc_evaluation e{};
  check(radloc_evaluate(cfg.get(), ds.get(), model.get(), csv.c_str(), &e), "evaluate");
  if (!g.quiet) {
    std::printf("%llu samples: namf %.6g m", static_cast<unsigned long long>(e.count), e.err_namf);
    if (model) std::printf(", cnn %.6g m", e.err_cnn);
    std::printf("\n");
  }
}

void cmd_experiment(const Globals& g, const std::string& name) {
  auto cfg = make_config(g, name);
  bool quiet = g.quiet;
  check(radloc_run_experiment(cfg.get(), name.c_str(), g.out.c_str(), log_line, &quiet), name);
  if (!g.quiet) std::printf("%s: results in %s\n", name.c_str(), g.out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar target localization: NAMF heatmaps, CNN regression and few-shot adaptation"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s; g.seed_set = true; }, "Master seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_flag("--deterministic", g.deterministic, "Single-threaded, bit-reproducible execution");
  app.add_option("--scenario", g.scenario, "Radar site")->check(CLI::IsMember({"O", "N", "W", "S", "E"}));
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress output");

  std::string dataset_path;
  std::string model_path;
  auto* gen = app.add_subcommand("generate", "Synthesize a heatmap dataset (dataset.rlhm)");
  auto* train = app.add_subcommand("train", "Train the CNN on a dataset (model.rlnn)");
  train->add_option("--dataset", dataset_path, "RLHM dataset")->required()->check(CLI::ExistingFile);
  auto* eval = app.add_subcommand("evaluate", "Localization errors on a dataset's validation split");
  eval->add_option("--dataset", dataset_path, "RLHM dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--model", model_path, "RLNN checkpoint")->check(CLI::ExistingFile);
  const char* experiments[] = {"threshold", "sweep-scnr", "sweep-size", "mismatch", "fsl", "doppler"};
  const char* blurbs[] = {"NAMF error vs SCNR around the breakdown threshold",
                          "CNN vs NAMF error across SCNR",
                          "CNN error vs dataset size",
                          "Train on the original site, test on displaced sites",
                          "Few-shot fine-tuning on displaced sites",
                          "Range, azimuth and velocity estimation"};
  std::vector<CLI::App*> exp_cmds;
  for (std::size_t i = 0; i < std::size(experiments); ++i) {
    exp_cmds.push_back(app.add_subcommand(experiments[i], blurbs[i]));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "radloc: %s\n", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) {
      cmd_generate(g);
    } else if (train->parsed()) {
      cmd_train(g, dataset_path);
    } else if (eval->parsed()) {
      cmd_evaluate(g, dataset_path, model_path);
    } else {
      for (auto* c : exp_cmds) {
        if (c->parsed()) cmd_experiment(g, c->get_name());
      }
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "radloc: %s\n", f.message.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "radloc: %s\n", e.what());
    return 1;
  }
  return 0;
}
