#include "dociiw/nn/unet.hpp"

#include <cmath>

#include "dociiw/ad/ops.hpp"
#include "dociiw/error.hpp"
#include "dociiw/rng.hpp"

namespace dociiw::nn {

int NetConfig::channels_at(int level) const noexcept {
  // The bottleneck (level == depth) keeps the deepest encoder width.
  const int l = level < depth ? level : depth - 1;
  return width << l;
}

void NetConfig::validate() const {
  if (in_channels < 1) throw Error(Errc::InvalidArgument, "NetConfig: in_channels must be >= 1");
  if (depth < 1 || depth > 8) throw Error(Errc::InvalidArgument, "NetConfig: depth must lie in [1, 8]");
  if (width < 1) throw Error(Errc::InvalidArgument, "NetConfig: width must be >= 1");
  if (kernel != 3) throw Error(Errc::InvalidArgument, "NetConfig: only 3x3 kernels are supported");
  if (heads.empty() || heads.size() > 2) throw Error(Errc::InvalidArgument, "NetConfig: decoder count must be 1 or 2");
  for (const auto& h : heads) {
    if (h.channels < 1) throw Error(Errc::InvalidArgument, "NetConfig: head channels must be >= 1");
  }
}

NetConfig NetConfig::wbnet(int depth, int width) {
  NetConfig c;
  c.depth = depth;
  c.width = width;
  c.heads = {{"kernel", 3, Activation::Softplus}};
  return c;
}

NetConfig NetConfig::smtnet(int depth, int width) {
  NetConfig c;
  c.depth = depth;
  c.width = width;
  c.heads = {{"material", 3, Activation::Sigmoid}, {"shading", 1, Activation::Softplus}};
  return c;
}

void ParamSet::add(std::string name, ad::Tensor value) { params_.push_back({std::move(name), std::move(value)}); }

std::size_t ParamSet::numel() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

std::size_t ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw Error(Errc::InvalidArgument, "no parameter named " + name);
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].value.shape != b[i].value.shape || a[i].value.data != b[i].value.data) {
      return false;
    }
  }
  return true;
}

UNet::UNet(NetConfig config) : config_(std::move(config)) {
  config_.validate();
  const int d = config_.depth;
  int prev = config_.in_channels;
  for (int l = 0; l < d; ++l) {
    const int c = config_.channels_at(l);
    convs_.push_back({"enc" + std::to_string(l) + ".conv0", prev, c});
    convs_.push_back({"enc" + std::to_string(l) + ".conv1", c, c});
    prev = c;
  }
  const int bott = config_.channels_at(d);
  convs_.push_back({"bottleneck.conv0", prev, bott});
  convs_.push_back({"bottleneck.conv1", bott, bott});
  for (std::size_t h = 0; h < config_.heads.size(); ++h) {
    const std::string prefix = "dec" + std::to_string(h) + ".";
    int up = bott;
    for (int l = d - 1; l >= 0; --l) {
      const int c = config_.channels_at(l);
      convs_.push_back({prefix + "level" + std::to_string(l) + ".conv0", up + c, c});
      convs_.push_back({prefix + "level" + std::to_string(l) + ".conv1", c, c});
      up = c;
    }
    convs_.push_back({prefix + "head", up, config_.heads[h].channels});
  }
}

ParamSet UNet::init(std::uint64_t seed) const {
  Rng rng(seed);
  ParamSet ps;
  const int k = config_.kernel;
  for (const auto& slot : convs_) {
    const double fan_in = static_cast<double>(slot.in) * k * k;
    const bool is_head = slot.name.ends_with(".head");
    // He-style bound for hidden layers, LeCun bound for the output heads.
    const double bound = is_head ? std::sqrt(3.0 / fan_in) : std::sqrt(6.0 / ((1.0 + 0.04) * fan_in));
    ad::Tensor w = ad::Tensor::zeros(ad::Shape{slot.out, slot.in, k, k});
    for (float& v : w.data) v = static_cast<float>(rng.uniform(-bound, bound));
    ps.add(slot.name + ".w", std::move(w));
    ps.add(slot.name + ".b", ad::Tensor::zeros(ad::Shape{slot.out}));
  }
  return ps;
}

std::vector<ad::Var> UNet::bind(ad::Tape& tape, const ParamSet& params) const {
  if (params.size() != convs_.size() * 2) {
    throw Error(Errc::CheckpointMismatch, "parameter count does not match network layout");
  }
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params.items()) vars.push_back(tape.variable(p.value, p.name));
  return vars;
}

std::vector<ad::Var> UNet::bind_frozen(ad::Tape& tape, const ParamSet& params) const {
  if (params.size() != convs_.size() * 2) {
    throw Error(Errc::CheckpointMismatch, "parameter count does not match network layout");
  }
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params.items()) vars.push_back(tape.constant(p.value, p.name));
  return vars;
}

std::vector<ad::Var> UNet::forward(std::span<const ad::Var> params, ad::Var input) const {
  using namespace ad;
  if (params.size() != convs_.size() * 2) {
    throw Error(Errc::CheckpointMismatch, "parameter count does not match network layout");
  }
  const Shape s = input.shape();
  if (s.rank() != 3 || s.c() != config_.in_channels) {
    throw Error(Errc::ShapeMismatch, "network input must be (" + std::to_string(config_.in_channels) + ",H,W), got " +
                                         s.str());
  }
  if (s.h() % config_.divisor() || s.w() % config_.divisor()) {
    throw Error(Errc::ShapeMismatch, "input " + s.str() + " not divisible by " + std::to_string(config_.divisor()));
  }
  std::size_t slot = 0;
  auto conv = [&](Var x) {
    Var y = conv2d(x, params[2 * slot], params[2 * slot + 1]);
    ++slot;
    return y;
  };

  std::vector<Var> skips;
  Var x = input;
  for (int l = 0; l < config_.depth; ++l) {
    x = silu(conv(x));
    x = silu(conv(x));
    skips.push_back(x);
    x = avg_pool2(x);
  }
  x = silu(conv(x));
  const Var bottleneck = silu(conv(x));

  std::vector<Var> outputs;
  for (const auto& head : config_.heads) {
    Var y = bottleneck;
    for (int l = config_.depth - 1; l >= 0; --l) {
      y = concat(upsample2(y), skips[l]);
      y = silu(conv(y));
      y = silu(conv(y));
    }
    y = conv(y);
    switch (head.activation) {
      case Activation::Softplus: y = softplus(y); break;
      case Activation::Sigmoid: y = sigmoid(y); break;
      case Activation::Identity: break;
    }
    outputs.push_back(y);
  }
  return outputs;
}

}  // namespace dociiw::nn
