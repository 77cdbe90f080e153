// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exit status is nonzero when any selected criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "radloc/analysis.hpp"
#include "radloc/estimators.hpp"
#include "radloc/experiments.hpp"
#include "radloc/namf.hpp"
#include "radloc/nn/checkpoint.hpp"
#include "radloc/nn/layers.hpp"
#include "radloc/nn/model.hpp"
#include "support/testing.hpp"

namespace fs = std::filesystem;
using namespace radloc;
using experiments::ExperimentConfig;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  std::string cli;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

Context* g_ctx = nullptr;

void progress(const std::string& msg) {
  const double t =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_ctx->start).count();
  std::fprintf(stderr, "[%8.1fs] %s\n", t, msg.c_str());
}

std::string num(double v) { return experiments::format_real(v); }

experiments::Log logger() {
  return [](const std::string& m) { progress(m); };
}

// ---------------------------------------------------------------- 1

Verdict breakdown_values() {
  const double k100 = namf::breakdown_threshold(1, 16, 100);
  const double k500 = namf::breakdown_threshold(1, 16, 500);
  const bool formula = std::abs(k100 - -3.979) < 5e-4 && std::abs(k500 - -7.474) < 5e-4;
  const bool quoted = std::abs(k100 - -4.0) <= 0.05 && std::abs(k500 - -7.5) <= 0.05;
  return {formula && quoted, "K=100: " + num(k100) + " dB, K=500: " + num(k500) +
                                 " dB (quoted -4 and -7.5, tolerance 0.05 dB)"};
}

// ---------------------------------------------------------------- 2

Verdict breakdown_knee() {
  auto cfg = ExperimentConfig::defaults_for("threshold");
  cfg.realizations_grid = {100};
  cfg.threshold_samples = 2000;
  cfg.scnr_grid_db.clear();
  for (int s = -40; s <= 20; s += 2) cfg.scnr_grid_db.push_back(s);
  cfg.deterministic = true;
  const auto out = experiments::run_threshold_experiment(cfg, logger());
  out.write((g_ctx->work / "knee").string());
  const auto& t = out.table("threshold.csv");
  std::vector<double> s, e;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    s.push_back(t.number(i, "mean_output_scnr_db"));
    e.push_back(t.number(i, "err_namf_m"));
  }
  const double knee = experiments::max_slope_point(s, e);
  const double predicted = namf::breakdown_threshold(1, 16, 100);
  return {std::abs(knee - predicted) <= 3.0,
          "max-slope point " + num(knee) + " dB vs predicted " + num(predicted) +
              " dB (tolerance 3 dB, 2000 samples per point)"};
}

// ---------------------------------------------------------------- 3, 4

Verdict namf_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + static_cast<int>(rng() % 4);
    const int k = 1 + static_cast<int>(rng() % 8);
    const CMatrix Y = testing::random_cmatrix(n, k, rng);
    const CMatrix S = testing::random_hpd(n, rng);
    const CVector a = testing::random_cvector(n, rng);
    worst = std::max(worst, testing::relative_error(namf::namf_statistic(Y, S, a),
                                                    testing::brute_force_namf(Y, S, a)));
  }
  return {worst < 1e-10, "worst relative error " + num(worst) + " over 100 instances (limit 1e-10)"};
}

Verdict namf_invariants() {
  double worst_scale = 0.0, worst_white = 0.0;
  bool nonneg = true, bounded = true;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const int n = 2 + static_cast<int>(seed % 7);
    const int k = 1 + static_cast<int>(seed % 9);
    const CMatrix Y = testing::random_cmatrix(n, k, rng);
    const CMatrix S = testing::random_hpd(n, rng);
    const CVector a = testing::random_cvector(n, rng);
    const double g = namf::namf_statistic(Y, S, a);
    nonneg = nonneg && g >= 0.0;
    const double g1 = namf::namf_statistic(Y.leftCols(1), S, a);
    bounded = bounded && g1 >= 0.0 && g1 <= 1.0 + 1e-12;
    const cdouble c = testing::random_nonzero_scalar(rng);
    worst_scale = std::max({worst_scale,
                            testing::relative_error(namf::namf_statistic(c * Y, S, a), g),
                            testing::relative_error(namf::namf_statistic(Y, S, c * a), g)});
    Eigen::SelfAdjointEigenSolver<CMatrix> es(S);
    const CMatrix W = es.operatorInverseSqrt();
    const double gw =
        namf::namf_statistic(W * Y, CMatrix::Identity(n, n), CVector(W * a));
    worst_white = std::max(worst_white, testing::relative_error(gw, g));
  }
  const bool pass = nonneg && bounded && worst_scale < 1e-12 && worst_white < 1e-10;
  return {pass, std::string("nonnegative ") + (nonneg ? "yes" : "no") + ", K=1 bound " +
                    (bounded ? "yes" : "no") + ", scale " + num(worst_scale) + " (1e-12), whitening " +
                    num(worst_white) + " (1e-10)"};
}

// ---------------------------------------------------------------- 5

std::string shape_str(const std::vector<std::size_t>& s) {
  std::string r;
  for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "x" : "") + std::to_string(s[i]);
  return r;
}

Verdict heatmap_shapes() {
  auto matched = ExperimentConfig::defaults_for("generate");
  matched.num_samples = 2;
  matched.deterministic = true;
  auto doppler = ExperimentConfig::defaults_for("doppler");
  doppler.num_samples = 2;
  doppler.deterministic = true;
  const auto gm = experiments::generate_dataset(matched);
  const auto gd = experiments::generate_dataset(doppler);
  const std::vector<std::size_t> want_m{5, 26}, want_d{5, 26, 31};
  bool pass = matched.grid_for(matched.site).shape() == want_m &&
              doppler.grid_for(doppler.site).shape() == want_d;
  for (const auto& s : gm.data.samples) pass = pass && s.shape == want_m;
  for (const auto& s : gd.data.samples) pass = pass && s.shape == want_d;
  return {pass, "matched " + shape_str(gm.data.samples[0].shape) + ", Doppler " +
                    shape_str(gd.data.samples[0].shape)};
}

// ---------------------------------------------------------------- 6

Verdict gradient_suite() {
  constexpr double kTol = 1e-4;
  std::map<std::string, double> worst;
  auto note = [&](const std::string& k, double v) { worst[k] = std::max(worst[k], v); };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    nn::Conv conv(2, 3, 3, seed % 2 ? 3 : 1);
    conv.weight = testing::random_tensor(conv.weight.shape, rng);
    conv.bias = testing::random_tensor(conv.bias.shape, rng);
    note("conv", testing::check_layer_gradients(conv, testing::random_tensor({2, 2, 2, 6, 4}, rng), rng).worst());

    nn::Dense dense(7, 3);
    dense.weight = testing::random_tensor(dense.weight.shape, rng);
    dense.bias = testing::random_tensor(dense.bias.shape, rng);
    note("dense", testing::check_layer_gradients(dense, testing::random_tensor({4, 7}, rng), rng).worst());

    nn::BatchNorm bn(3);
    bn.gamma = testing::random_tensor(bn.gamma.shape, rng);
    bn.beta = testing::random_tensor(bn.beta.shape, rng);
    note("batchnorm", testing::check_layer_gradients(bn, testing::random_tensor({4, 3, 2, 5, 1}, rng), rng).worst());

    nn::Relu relu;
    nn::Tensor rx = testing::random_tensor({3, 2, 4, 5, 1}, rng);
    for (double& v : rx.values) v = v >= 0 ? v + 1e-3 : v - 1e-3;  // off the kink
    note("relu", testing::check_layer_gradients(relu, rx, rng).worst());

    nn::MaxPool pool(2, seed % 2 ? 2 : 1);
    note("maxpool", testing::check_layer_gradients(pool, testing::random_tensor({2, 3, 2, 7, 4}, rng), rng).worst());

    nn::Flatten flat;
    note("flatten", testing::check_layer_gradients(flat, testing::random_tensor({2, 3, 2, 4, 1}, rng), rng).worst());

    // Full baseline network on the matched grid.
    auto cfg = ExperimentConfig::defaults_for("generate");
    auto model = nn::build_baseline_cnn(cfg.grid_for(cfg.site), seed);
    for (nn::Tensor* p : model.trainable_parameters()) {
      for (double& v : p->values) v += 0.1 * std::normal_distribution<double>(0, 1)(rng);
    }
    const nn::Tensor x = testing::random_tensor({4, 1, 5, 26, 1}, rng);
    // A first-layer weight moves thousands of relu and pool inputs, so wider
    // steps straddle kinks; 1e-7 keeps every difference on one linear piece.
    note("baseline", testing::check_model_gradients_sampled(model, x, rng, 48, 1e-7));
  }
  bool pass = true;
  std::string detail;
  for (const auto& [k, v] : worst) {
    pass = pass && v < kTol;
    detail += (detail.empty() ? "" : ", ") + k + " " + num(v);
  }
  return {pass, "worst relative discrepancy over 20 seeds: " + detail + " (limit 1e-4)"};
}

// ---------------------------------------------------------------- 7, 8

struct SizeRun {
  bool done = false;
  std::map<std::size_t, double> err_cnn;
  double err_namf = NAN;
};

SizeRun& size_run() {
  static SizeRun run;
  if (run.done) return run;
  auto cfg = ExperimentConfig::defaults_for("sweep-size");
  cfg.size_grid = {1000, 10000};
  cfg.scnr_db = 20.0;
  cfg.deterministic = true;
  const auto out = experiments::run_size_sweep(cfg, logger());
  out.write((g_ctx->work / "size").string());
  const auto& t = out.table("sweep_size.csv");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    run.err_cnn[static_cast<std::size_t>(t.number(i, "N"))] = t.number(i, "err_cnn");
    run.err_namf = t.number(i, "err_namf");
  }
  run.done = true;
  return run;
}

Verdict cnn_gain() {
  const auto& r = size_run();
  const double cnn = r.err_cnn.at(10000);
  const double gain = estimators::gain_factor(r.err_namf, cnn);
  return {cnn < r.err_namf, "N=10000 at 20 dB: Err_CNN " + num(cnn) + " m, Err_NAMF " +
                                num(r.err_namf) + " m, gain factor " + num(gain)};
}

Verdict size_monotone() {
  const auto& r = size_run();
  const double small = r.err_cnn.at(1000), large = r.err_cnn.at(10000);
  return {large <= small, "Err_CNN " + num(small) + " m at N=1000, " + num(large) + " m at N=10000"};
}

// ---------------------------------------------------------------- 9, 10

struct FslRun {
  bool done = false;
  experiments::ExperimentOutput out;
};

FslRun& fsl_run() {
  static FslRun run;
  if (run.done) return run;
  auto cfg = ExperimentConfig::defaults_for("fsl");
  cfg.fsl_samples = 64;
  cfg.deterministic = true;
  run.out = experiments::run_fsl_experiment(cfg, logger());
  run.out.write((g_ctx->work / "fsl").string());
  run.done = true;
  return run;
}

const std::vector<std::uint8_t>& checkpoint(const experiments::ExperimentOutput& out,
                                            const std::string& name) {
  for (const auto& [n, bytes] : out.checkpoints) {
    if (n == name) return bytes;
  }
  fail(ErrorCode::kInvalidArgument, "missing checkpoint " + name);
}

Verdict fsl_restoration() {
  const auto& out = fsl_run().out;
  const auto& t = out.table("fsl.csv");
  auto base = nn::load_checkpoint(checkpoint(out, "fsl_base.rlnn"));
  auto cfg = ExperimentConfig::defaults_for("fsl");
  const std::size_t dense = nn::analytic_dense_count(nn::baseline_architecture(cfg.grid_for(cfg.site)));
  bool improved = true, frozen_same = true, count_ok = true;
  std::string detail;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto id = std::get<std::string>(t.rows[i][t.column("scenario")]);
    const double before = t.number(i, "err_cnn_unadapted"), after = t.number(i, "err_cnn");
    improved = improved && after < before;
    detail += id + " " + num(before) + "->" + num(after) + " m; ";

    auto tuned = nn::load_checkpoint(checkpoint(out, "fsl_" + id + ".rlnn"));
    count_ok = count_ok && tuned.count_trainable() == dense;
    for (std::size_t l = 0; l < tuned.num_layers(); ++l) {
      auto& lt = tuned.layer(l);
      if (!lt.frozen()) continue;
      auto tp = lt.parameters(), bp = base.layer(l).parameters();
      auto ts = lt.state(), bs = base.layer(l).state();
      tp.insert(tp.end(), ts.begin(), ts.end());
      bp.insert(bp.end(), bs.begin(), bs.end());
      for (std::size_t k = 0; k < tp.size(); ++k) {
        frozen_same = frozen_same && tp[k]->values == bp[k]->values;
      }
    }
  }
  if (t.rows.size() != 4) improved = false;
  detail += std::string("frozen tensors bit-unchanged ") + (frozen_same ? "yes" : "no") +
            ", trainable count " + (count_ok ? "" : "not ") + "equal to dense head " +
            std::to_string(dense);
  return {improved && frozen_same && count_ok, detail};
}

Verdict chordal_checks() {
  Rng rng(77);
  auto basis = [&](int n, int k) {
    Eigen::HouseholderQR<CMatrix> qr(testing::random_cmatrix(n, k, rng));
    return analysis::SubspaceBasis{CMatrix(qr.householderQ() * CMatrix::Identity(n, k)),
                                   ScenarioId::O};
  };
  double self = 0, ortho_gap = 0, oracle = 0, sym = 0, unitary = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 8 + trial % 5, k = 1 + trial % 3;
    const auto u = basis(n, k), v = basis(n, k + trial % 2);
    self = std::max(self, std::abs(analysis::chordal_distance(u, u)));
    // Orthogonal k-dimensional pair from one unitary.
    const CMatrix q = testing::random_unitary(n, rng);
    const analysis::SubspaceBasis a{q.leftCols(k), ScenarioId::O}, b{q.middleCols(k, k), ScenarioId::O};
    ortho_gap = std::max(ortho_gap, std::abs(analysis::chordal_distance(a, b) - k));
    Eigen::JacobiSVD<CMatrix> svd(u.columns.adjoint() * v.columns);
    double ref = 0;
    for (int i = 0; i < std::min(u.rank(), v.rank()); ++i) {
      const double ang = std::acos(std::min(1.0, svd.singularValues()[i]));
      ref += std::sin(ang) * std::sin(ang);
    }
    const double d = analysis::chordal_distance(u, v);
    oracle = std::max(oracle, std::abs(d - ref));
    sym = std::max(sym, std::abs(d - analysis::chordal_distance(v, u)));
    const CMatrix w = testing::random_unitary(n, rng);
    const analysis::SubspaceBasis wu{w * u.columns, ScenarioId::O}, wv{w * v.columns, ScenarioId::O};
    unitary = std::max(unitary, std::abs(analysis::chordal_distance(wu, wv) - d));
  }
  const bool pass = self < 1e-10 && ortho_gap < 1e-10 && oracle < 1e-10 && sym < 1e-10 && unitary < 1e-10;
  std::string detail = "self " + num(self) + ", orthogonal " + num(ortho_gap) + ", oracle " +
                       num(oracle) + ", symmetry " + num(sym) + ", unitary " + num(unitary);
  // Reported only: rank correlation between gain factor and distance.
  const auto& diag = fsl_run().out.table("fsl_diagnostics.csv");
  const double rho = diag.number(0, "value");
  detail += "; reported Spearman(gain, distance) " + num(rho);
  return {pass && diag.rows.size() == 1, detail};
}

// ---------------------------------------------------------------- 11

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return files;
}

int run_cli(const std::vector<std::string>& args) {
  std::string cmd = "\"" + g_ctx->cli + "\" -q";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  return std::system(cmd.c_str());
}

Verdict determinism() {
  if (g_ctx->cli.empty()) return {false, "no CLI binary given (--cli)"};
  const fs::path root = g_ctx->work / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path cfg = root / "small.json";
  std::ofstream(cfg) << R"({"num_samples": 40, "threshold_samples": 20, "scnr_grid_db": [-10, 20],
  "realizations_grid": [100, 200], "size_grid": [20, 40], "fsl_samples": 8,
  "train": {"epochs": 3, "batch_size": 16}, "fsl_train": {"epochs": 3}})";
  const fs::path dcfg = root / "doppler.json";
  std::ofstream(dcfg) << R"({"num_samples": 12, "realizations": 100, "scnr_grid_db": [20],
  "train": {"epochs": 2, "batch_size": 8}})";

  const std::vector<std::string> exps{"threshold", "sweep-scnr", "sweep-size", "mismatch", "fsl", "doppler"};
  std::vector<std::string> differing;
  std::size_t files = 0;
  for (const auto& e : exps) {
    const std::string c = e == "doppler" ? dcfg.string() : cfg.string();
    for (const char* rep : {"a", "b"}) {
      const auto out = (root / rep / e).string();
      if (run_cli({"--config", c, "--deterministic", "--seed", "11", "--out", out, e}) != 0) {
        return {false, e + " run failed"};
      }
    }
  }
  // The single-step commands chain through files.
  for (const char* rep : {"a", "b"}) {
    const auto out = (root / rep / "pipeline").string();
    const auto ds = out + "/dataset.rlhm", model = out + "/model.rlnn";
    if (run_cli({"--config", cfg.string(), "--deterministic", "--out", out, "generate"}) != 0 ||
        run_cli({"--config", cfg.string(), "--deterministic", "--out", out, "train", "--dataset", ds}) != 0 ||
        run_cli({"--config", cfg.string(), "--deterministic", "--out", out, "evaluate", "--dataset", ds,
                 "--model", model}) != 0) {
      return {false, "generate/train/evaluate run failed"};
    }
  }
  const auto a = read_tree(root / "a"), b = read_tree(root / "b");
  for (const auto& [name, bytes] : a) {
    ++files;
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) differing.push_back(name);
  }
  if (a.size() != b.size()) differing.push_back("(file sets differ)");
  std::string detail = std::to_string(files) + " CSV and checkpoint files compared across two runs";
  if (!differing.empty()) detail += "; differing: " + differing.front();
  return {differing.empty() && files > 0, detail};
}

// ---------------------------------------------------------------- 12

Verdict scnr_and_error_units() {
  Rng rng(12);
  const CMatrix Z = testing::random_cmatrix(6, 10, rng);
  const CMatrix S = testing::random_hpd(6, rng);
  const double same = namf::output_scnr(Z, Z, S);
  const double doubled = namf::output_scnr(2.0 * Z, Z, S);
  const std::vector<estimators::ErrorPair> pairs{{{0, 0}, {3, 4}}};
  const double err = estimators::mean_error(pairs);
  const bool pass = std::abs(same) < 1e-12 && std::abs(doubled - 6.0206) < 5e-5 &&
                    std::abs(err - 5.0) < 1e-12;
  return {pass, "X=Z " + num(same) + " dB, doubled amplitude " + num(doubled) +
                    " dB, (0,0)/(3,4) mean error " + num(err)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  Context ctx;
  ctx.work = fs::current_path() / "acceptance_work";
  std::string only;
  std::string work = ctx.work.string();
  app.add_option("--work", work, "Scratch directory for experiment outputs")->capture_default_str();
  app.add_option("--cli", ctx.cli, "Path to the radloc command-line binary");
  app.add_option("--only", only, "Comma-separated criterion numbers to run");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  fs::create_directories(ctx.work);
  g_ctx = &ctx;

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');) {
    if (!tok.empty()) selected.insert(std::stoi(tok));
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"breakdown threshold values", breakdown_values},
      {"breakdown knee of the NAMF error curve", breakdown_knee},
      {"NAMF brute-force oracle", namf_oracle},
      {"NAMF invariants", namf_invariants},
      {"heatmap shapes", heatmap_shapes},
      {"gradient checks", gradient_suite},
      {"CNN beats NAMF at 20 dB, N=10000", cnn_gain},
      {"error does not grow with dataset size", size_monotone},
      {"few-shot adaptation", fsl_restoration},
      {"chordal distance", chordal_checks},
      {"deterministic reruns", determinism},
      {"output SCNR and error units", scnr_and_error_units},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    progress("criterion " + std::to_string(id) + ": " + criteria[i].first);
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += v.pass ? 0 : 1;
    std::printf("criterion %2d %s: %s: %s\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
