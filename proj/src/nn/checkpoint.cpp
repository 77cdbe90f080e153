// SPDX-License-Identifier: Apache-2.0
#include "radloc/nn/checkpoint.hpp"

#include "radloc/binary_io.hpp"

namespace radloc::nn {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'N', 'N'};

void write_tensor(io::Writer& w, const Tensor& t) {
  w.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) w.u64(d);
  for (double v : t.values) w.f64(v);
}

void read_tensor(io::Reader& r, Tensor& t) {
  const std::uint32_t rank = r.u32();
  Shape s(rank);
  for (auto& d : s) d = r.u64();
  if (s != t.shape) {
    fail(ErrorCode::kFormat, "checkpoint tensor " + shape_string(s) + " does not match layer " +
                                 shape_string(t.shape));
  }
  for (double& v : t.values) v = r.f64();
}

std::size_t attr(const std::vector<std::int64_t>& a, std::size_t i) {
  if (i >= a.size() || a[i] <= 0 || a[i] > (std::int64_t{1} << 32)) {
    fail(ErrorCode::kFormat, "checkpoint: bad layer attribute");
  }
  return static_cast<std::size_t>(a[i]);
}

std::unique_ptr<Layer> make_layer(std::uint8_t type, const std::vector<std::int64_t>& a) {
  switch (static_cast<LayerKind>(type)) {
    case LayerKind::kConv:
      return std::make_unique<Conv>(attr(a, 0), attr(a, 1), attr(a, 2), attr(a, 3));
    case LayerKind::kBatchNorm: return std::make_unique<BatchNorm>(attr(a, 0));
    case LayerKind::kRelu: return std::make_unique<Relu>();
    case LayerKind::kMaxPool: return std::make_unique<MaxPool>(attr(a, 0), attr(a, 1));
    case LayerKind::kFlatten: return std::make_unique<Flatten>();
    case LayerKind::kDense: return std::make_unique<Dense>(attr(a, 0), attr(a, 1));
  }
  fail(ErrorCode::kFormat, "checkpoint: unknown layer type " + std::to_string(type));
}

}  // namespace

std::vector<std::uint8_t> save_checkpoint(const CnnModel& model) {
  io::Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(model.output_dim()));
  w.u32(static_cast<std::uint32_t>(model.input_shape().size()));
  for (std::size_t d : model.input_shape()) w.u64(d);
  w.u32(static_cast<std::uint32_t>(model.num_layers()));
  CnnModel& m = const_cast<CnnModel&>(model);
  for (std::size_t i = 0; i < m.num_layers(); ++i) {
    Layer& l = m.layer(i);
    w.u8(static_cast<std::uint8_t>(l.kind()));
    w.u8(l.frozen() ? 1 : 0);
    const auto a = l.attributes();
    w.u32(static_cast<std::uint32_t>(a.size()));
    for (auto v : a) w.i64(v);
    auto params = l.parameters();
    auto state = l.state();
    w.u32(static_cast<std::uint32_t>(params.size() + state.size()));
    for (Tensor* t : params) write_tensor(w, *t);
    for (Tensor* t : state) write_tensor(w, *t);
  }
  return std::move(w.buffer());
}

CnnModel load_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::Reader r(bytes.data(), bytes.size(), "checkpoint");
  char magic[4];
  r.bytes(magic, 4);
  if (std::string(magic, 4) != "RLNN") fail(ErrorCode::kFormat, "not an RLNN checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kFormat, "unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t out_dim = r.u32();
  const std::uint32_t rank = r.u32();
  if (rank == 0 || rank > 8) fail(ErrorCode::kFormat, "checkpoint: bad input rank");
  Shape in(rank);
  for (auto& d : in) d = r.u64();
  CnnModel m(in, out_dim);
  const std::uint32_t n_layers = r.u32();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint8_t type = r.u8();
    const std::uint8_t frozen = r.u8();
    const std::uint32_t n_attr = r.u32();
    if (n_attr > 16) fail(ErrorCode::kFormat, "checkpoint: bad attribute count");
    std::vector<std::int64_t> a(n_attr);
    for (auto& v : a) v = r.i64();
    auto layer = make_layer(type, a);
    layer->set_frozen(frozen != 0);
    auto params = layer->parameters();
    auto state = layer->state();
    if (r.u32() != params.size() + state.size()) {
      fail(ErrorCode::kFormat, "checkpoint: tensor count mismatch");
    }
    for (Tensor* t : params) read_tensor(r, *t);
    for (Tensor* t : state) read_tensor(r, *t);
    try {
      m.add(std::move(layer));
    } catch (const Error& e) {
      fail(ErrorCode::kFormat, std::string("checkpoint: ") + e.what());
    }
  }
  r.expect_end();
  if (m.current_output_shape() != Shape{out_dim}) {
    fail(ErrorCode::kFormat, "checkpoint: output dimension mismatch");
  }
  return m;
}

void save_checkpoint_file(const CnnModel& model, const std::string& path) {
  io::write_file(path, save_checkpoint(model));
}

CnnModel load_checkpoint_file(const std::string& path) {
  return load_checkpoint(io::read_file(path));
}

}  // namespace radloc::nn
