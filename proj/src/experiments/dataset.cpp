// SPDX-License-Identifier: Apache-2.0
#include "radloc/binary_io.hpp"
#include "radloc/experiments.hpp"

namespace radloc::experiments {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'H', 'M'};

}  // namespace

std::vector<std::uint8_t> write_dataset(const Dataset& d) {
  const auto dims = d.grid.shape();
  const std::size_t per = d.grid.size();
  const std::size_t ld = d.label_dim();
  require(d.n_train <= d.samples.size(), "train split exceeds sample count");

  io::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kDatasetVersion);
  w.u64(d.samples.size());
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (auto x : dims) w.u64(x);
  w.u32(static_cast<std::uint32_t>(ld));
  w.u8(static_cast<std::uint8_t>(scenario_char(d.scenario)));
  w.u64(d.seed);
  w.u64(d.scene_seed);
  w.u64(d.n_train);
  w.u32(static_cast<std::uint32_t>(d.pulses));
  w.u32(static_cast<std::uint32_t>(d.subarrays));
  w.u32(static_cast<std::uint32_t>(d.realizations));
  w.f64(d.gain);
  w.f64(d.mean_output_scnr_db);
  w.f64(d.grid.r_min_m);
  w.f64(d.grid.dr_m);
  w.f64(d.grid.theta_min_deg);
  w.f64(d.grid.dtheta_deg);
  w.f64(d.grid.doppler() ? d.grid.velocity->v_min_mps : 0.0);
  w.f64(d.grid.doppler() ? d.grid.velocity->dv_mps : 0.0);
  for (const auto& s : d.samples) {
    if (s.values.size() != per) fail(ErrorCode::kInvalidArgument, "sample does not match dataset dims");
    for (double v : s.values) w.f32(static_cast<float>(v));
    w.f64(s.label.range_m);
    w.f64(s.label.azimuth_deg);
    if (ld == 3) w.f64(s.label.velocity_mps.value_or(0.0));
  }
  return std::move(w.buffer());
}

Dataset read_dataset(const std::vector<std::uint8_t>& bytes) {
  io::Reader r(bytes.data(), bytes.size(), "dataset");
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != "RLHM") fail(ErrorCode::kFormat, "not an RLHM dataset");
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion) {
    fail(ErrorCode::kFormat, "unsupported dataset version " + std::to_string(version));
  }
  Dataset d;
  const std::uint64_t count = r.u64();
  const std::uint32_t ndims = r.u32();
  if (ndims != 2 && ndims != 3) fail(ErrorCode::kFormat, "dataset: tensor rank must be 2 or 3");
  std::vector<std::uint64_t> dims(ndims);
  for (auto& x : dims) x = r.u64();
  const std::uint32_t ld = r.u32();
  if (ld != ndims) fail(ErrorCode::kFormat, "dataset: label dimension does not match tensor rank");
  const char sc = static_cast<char>(r.u8());
  try {
    d.scenario = parse_scenario_id(std::string(1, sc));
  } catch (const Error&) {
    fail(ErrorCode::kFormat, "dataset: unknown scenario tag");
  }
  d.seed = r.u64();
  d.scene_seed = r.u64();
  d.n_train = r.u64();
  d.pulses = static_cast<int>(r.u32());
  d.subarrays = static_cast<int>(r.u32());
  d.realizations = static_cast<int>(r.u32());
  d.gain = r.f64();
  d.mean_output_scnr_db = r.f64();
  d.grid.r_min_m = r.f64();
  d.grid.dr_m = r.f64();
  d.grid.theta_min_deg = r.f64();
  d.grid.dtheta_deg = r.f64();
  const double v_min = r.f64();
  const double dv = r.f64();
  for (auto x : dims) {
    if (x == 0 || x > (1u << 20)) fail(ErrorCode::kFormat, "dataset: bad tensor dims");
  }
  d.grid.kappa = static_cast<int>(dims[0]);
  d.grid.n_azimuth = static_cast<int>(dims[1]);
  if (ndims == 3) d.grid.velocity = namf::VelocityAxis{v_min, dv, static_cast<int>(dims[2])};
  if (d.n_train > count) fail(ErrorCode::kFormat, "dataset: train split exceeds sample count");

  const std::size_t per = d.grid.size();
  const std::size_t sample_bytes = per * 4 + ld * 8;
  if (count > r.remaining() / sample_bytes) fail(ErrorCode::kFormat, "dataset: truncated");
  d.samples.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto& s = d.samples[i];
    s.shape = d.grid.shape();
    s.values.resize(per);
    for (double& v : s.values) v = static_cast<double>(r.f32());
    s.label.range_m = r.f64();
    s.label.azimuth_deg = r.f64();
    if (ld == 3) s.label.velocity_mps = r.f64();
    s.scenario = d.scenario;
    s.mean_output_scnr_db = d.mean_output_scnr_db;
    s.seed = derive_seed(d.seed, i);
  }
  r.expect_end();
  return d;
}

void write_dataset_file(const Dataset& d, const std::string& path) {
  io::write_file(path, write_dataset(d));
}

Dataset read_dataset_file(const std::string& path) { return read_dataset(io::read_file(path)); }

}  // namespace radloc::experiments
