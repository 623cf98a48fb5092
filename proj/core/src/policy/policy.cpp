#include "advtex/policy/policy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "advtex/util/rng.hpp"

namespace advtex::policy {

using diff::Shape;
using diff::Tensor;
using diff::Var;

namespace {

std::array<double, 6> scale_from(const scene::ActionLimits& lim) {
  return {lim.step_max, lim.step_max, lim.step_max, lim.rot_max, lim.rot_max, lim.rot_max};
}

}  // namespace

Architecture Architecture::standard(const scene::ActionLimits& limits, int input_size) {
  Architecture a;
  a.id = 1;
  a.input_height = a.input_width = input_size;
  a.convs = {{3, 8, 5, 2}, {8, 16, 5, 2}};
  a.hidden = {64};
  a.action_scale = scale_from(limits);
  return a;
}

Architecture Architecture::compact(const scene::ActionLimits& limits, int input_size) {
  Architecture a;
  a.id = 2;
  a.input_height = a.input_width = input_size;
  a.convs = {{3, 12, 3, 2}, {12, 12, 3, 2}};
  a.hidden = {64};
  a.action_scale = scale_from(limits);
  return a;
}

Architecture Architecture::by_name(const std::string& name, const scene::ActionLimits& limits, int input_size) {
  if (name == "standard") return standard(limits, input_size);
  if (name == "compact") return compact(limits, input_size);
  throw std::invalid_argument("unknown policy architecture '" + name + "'");
}

Shape Architecture::feature_shape() const {
  std::size_t c = 3, h = static_cast<std::size_t>(input_height), w = static_cast<std::size_t>(input_width);
  for (const ConvLayer& l : convs) {
    const auto k = static_cast<std::size_t>(l.kernel), s = static_cast<std::size_t>(l.stride);
    if (h < k || w < k) throw std::invalid_argument("architecture: conv kernel larger than its input");
    h = (h - k) / s + 1;
    w = (w - k) / s + 1;
    c = static_cast<std::size_t>(l.out_channels);
  }
  return {c, h, w};
}

void Architecture::validate() const {
  if (input_height <= 0 || input_width <= 0) throw std::invalid_argument("architecture: bad input size");
  if (convs.empty()) throw std::invalid_argument("architecture: at least one conv layer is required");
  int c = 3;
  for (const ConvLayer& l : convs) {
    if (l.in_channels != c || l.out_channels <= 0 || l.kernel <= 0 || l.stride <= 0) {
      throw std::invalid_argument("architecture: inconsistent conv layer");
    }
    c = l.out_channels;
  }
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("architecture: hidden width must be positive");
  }
  (void)feature_shape();
}

PolicyNet::PolicyNet(Architecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  Rng rng(seed);
  auto he = [&rng](Shape shape, std::size_t fan_in, double gain) {
    Tensor t(std::move(shape));
    const double sd = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.values()) v = normal(rng, 0.0, sd);
    return t;
  };
  for (const ConvLayer& l : arch_.convs) {
    const auto o = static_cast<std::size_t>(l.out_channels), c = static_cast<std::size_t>(l.in_channels),
               k = static_cast<std::size_t>(l.kernel);
    params_.push_back(he({o, c, k, k}, c * k * k, 1.0));
    params_.push_back(Tensor({o}, 0.0));
  }
  std::size_t width = diff::shape_numel(arch_.feature_shape());
  for (int h : arch_.hidden) {
    params_.push_back(he({width, static_cast<std::size_t>(h)}, width, 1.0));
    params_.push_back(Tensor({1, static_cast<std::size_t>(h)}, 0.0));
    width = static_cast<std::size_t>(h);
  }
  params_.push_back(he({width, 6}, width, 0.1));
  params_.push_back(Tensor({1, 6}, 0.0));
}

PolicyNet::PolicyNet(Architecture arch, std::vector<Tensor> params) : arch_(std::move(arch)), params_(std::move(params)) {
  arch_.validate();
  check_params();
}

void PolicyNet::check_params() const {
  std::vector<Shape> expect;
  for (const ConvLayer& l : arch_.convs) {
    const auto o = static_cast<std::size_t>(l.out_channels), c = static_cast<std::size_t>(l.in_channels),
               k = static_cast<std::size_t>(l.kernel);
    expect.push_back({o, c, k, k});
    expect.push_back({o});
  }
  std::size_t width = diff::shape_numel(arch_.feature_shape());
  for (int h : arch_.hidden) {
    expect.push_back({width, static_cast<std::size_t>(h)});
    expect.push_back({1, static_cast<std::size_t>(h)});
    width = static_cast<std::size_t>(h);
  }
  expect.push_back({width, 6});
  expect.push_back({1, 6});
  if (expect.size() != params_.size()) throw std::invalid_argument("policy: wrong number of parameter tensors");
  for (std::size_t i = 0; i < expect.size(); ++i) {
    if (params_[i].shape() != expect[i]) {
      throw std::invalid_argument("policy: parameter " + std::to_string(i) + " has shape " +
                                  diff::shape_str(params_[i].shape()) + ", expected " + diff::shape_str(expect[i]));
    }
  }
}

std::size_t PolicyNet::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor& p : params_) n += p.size();
  return n;
}

PolicyNet::Graph PolicyNet::forward(diff::Tape& tape, Var image, bool params_require_grad) const {
  const Shape expect{static_cast<std::size_t>(arch_.input_height), static_cast<std::size_t>(arch_.input_width), 3};
  if (image.shape() != expect) {
    throw diff::ShapeError("policy: image shape " + diff::shape_str(image.shape()) + " does not match " +
                           diff::shape_str(expect));
  }
  Graph g;
  for (const Tensor& p : params_) g.params.push_back(tape.view(p, params_require_grad));
  std::size_t pi = 0;
  Var x = diff::hwc_to_chw(image);
  for (const ConvLayer& l : arch_.convs) {
    x = diff::relu(diff::conv2d(x, g.params[pi], g.params[pi + 1], static_cast<std::size_t>(l.stride)));
    pi += 2;
  }
  g.features = x;
  x = diff::reshape(x, {1, x.value().size()});
  for (std::size_t i = 0; i < arch_.hidden.size(); ++i) {
    x = diff::relu(diff::add(diff::matmul(x, g.params[pi]), g.params[pi + 1]));
    pi += 2;
  }
  x = diff::add(diff::matmul(x, g.params[pi]), g.params[pi + 1]);
  Tensor scale({1, 6});
  for (int i = 0; i < 6; ++i) scale[i] = arch_.action_scale[i];
  g.action = diff::mul(x, tape.constant(std::move(scale)));
  return g;
}

Action6 PolicyNet::act(const Tensor& image) const {
  diff::Tape tape;
  Graph g = forward(tape, tape.view(image));
  return to_action(g.action.value());
}

Action6 to_action(const Tensor& a) {
  if (a.size() != 6) throw diff::ShapeError("action tensor must hold 6 values, got " + diff::shape_str(a.shape()));
  Action6 out;
  out.dp = scene::Vec3(a[0], a[1], a[2]);
  out.drot = scene::Vec3(a[3], a[4], a[5]);
  return out;
}

Tensor from_action(const Action6& a) {
  return Tensor({1, 6}, {a.dp.x(), a.dp.y(), a.dp.z(), a.drot.x(), a.drot.y(), a.drot.z()});
}

// Checkpoint layout (all integers little-endian):
//   char[8]  "ADVTXPOL"
//   u32      format version (1)
//   u32      architecture id
//   u32      input height, u32 input width
//   u32      conv count, then per conv: u32 in, out, kernel, stride
//   u32      hidden count, then u32 width per hidden layer
//   f64[6]   action scale
//   u32      tensor count, then per tensor: u32 rank, u64 extents[rank],
//            f64 values[prod(extents)] in row-major order
namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'T', 'X', 'P', 'O', 'L'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw std::runtime_error("policy checkpoint truncated");
  return v;
}

}  // namespace

void PolicyNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, arch_.id);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch_.input_height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch_.input_width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch_.convs.size()));
  for (const ConvLayer& l : arch_.convs) {
    for (int v : {l.in_channels, l.out_channels, l.kernel, l.stride}) put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arch_.hidden.size()));
  for (int h : arch_.hidden) put<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  for (double s : arch_.action_scale) put<double>(out, s);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params_.size()));
  for (const Tensor& p : params_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.rank()));
    for (std::size_t d : p.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

PolicyNet PolicyNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path.string() + " is not a policy checkpoint");
  }
  if (const auto v = get<std::uint32_t>(in); v != kVersion) {
    throw std::runtime_error("unsupported policy checkpoint version " + std::to_string(v));
  }
  Architecture arch;
  arch.id = get<std::uint32_t>(in);
  arch.input_height = static_cast<int>(get<std::uint32_t>(in));
  arch.input_width = static_cast<int>(get<std::uint32_t>(in));
  const auto n_conv = get<std::uint32_t>(in);
  if (n_conv > 64) throw std::runtime_error("policy checkpoint: implausible conv count");
  for (std::uint32_t i = 0; i < n_conv; ++i) {
    ConvLayer l{};
    l.in_channels = static_cast<int>(get<std::uint32_t>(in));
    l.out_channels = static_cast<int>(get<std::uint32_t>(in));
    l.kernel = static_cast<int>(get<std::uint32_t>(in));
    l.stride = static_cast<int>(get<std::uint32_t>(in));
    arch.convs.push_back(l);
  }
  const auto n_hidden = get<std::uint32_t>(in);
  if (n_hidden > 64) throw std::runtime_error("policy checkpoint: implausible hidden count");
  for (std::uint32_t i = 0; i < n_hidden; ++i) arch.hidden.push_back(static_cast<int>(get<std::uint32_t>(in)));
  for (double& s : arch.action_scale) s = get<double>(in);
  const auto n_tensors = get<std::uint32_t>(in);
  if (n_tensors > 1024) throw std::runtime_error("policy checkpoint: implausible tensor count");
  std::vector<Tensor> params;
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const auto rank = get<std::uint32_t>(in);
    if (rank > 8) throw std::runtime_error("policy checkpoint: implausible tensor rank");
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<std::size_t>(get<std::uint64_t>(in)));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw std::runtime_error("policy checkpoint truncated");
    params.push_back(std::move(t));
  }
  return PolicyNet(std::move(arch), std::move(params));
}

}  // namespace advtex::policy
