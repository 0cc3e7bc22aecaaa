#include "dociiw/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

#include "dociiw/error.hpp"

namespace dociiw::nn {

namespace {

constexpr std::string_view kMagic = "DIIWCKPT";

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void le(T v) {
    static_assert(std::is_integral_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
  }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f32s(std::span<const float> vs) {
    for (float f : vs) u32(std::bit_cast<std::uint32_t>(f));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error(Errc::IoError, "checkpoint truncated");
  }
  template <class T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(in_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  std::uint8_t u8() { return le<std::uint8_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  void f32s(std::vector<float>& out, std::size_t n) {
    need(n * 4);
    out.resize(n);
    for (auto& f : out) f = std::bit_cast<float>(u32());
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  const NetConfig& c = ckpt.config;
  w.u32(static_cast<std::uint32_t>(c.in_channels));
  w.u32(static_cast<std::uint32_t>(c.depth));
  w.u32(static_cast<std::uint32_t>(c.width));
  w.u32(static_cast<std::uint32_t>(c.kernel));
  w.u32(static_cast<std::uint32_t>(c.heads.size()));
  for (const auto& h : c.heads) {
    w.u32(static_cast<std::uint32_t>(h.channels));
    w.u32(static_cast<std::uint32_t>(h.activation));
    w.str(h.name);
  }
  w.u64(ckpt.step);
  w.u64(ckpt.epoch);
  w.u64(ckpt.seed);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params.items()) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.shape.rank()));
    for (int d : p.value.shape.dims()) w.u32(static_cast<std::uint32_t>(d));
    w.f32s(p.value.data);
  }
  w.le<std::uint8_t>(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    const AdamState& s = *ckpt.optimizer;
    if (s.m.size() != ckpt.params.size() || s.v.size() != ckpt.params.size()) {
      throw Error(Errc::ShapeMismatch, "optimizer state does not match parameters");
    }
    w.u64(s.t);
    for (std::size_t i = 0; i < s.m.size(); ++i) {
      w.f32s(s.m[i]);
      w.f32s(s.v[i]);
    }
  }
  return w.take();
}

Checkpoint deserialize(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw Error(Errc::IoError, "not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(Errc::CheckpointMismatch, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  NetConfig& c = ckpt.config;
  c.in_channels = static_cast<int>(r.u32());
  c.depth = static_cast<int>(r.u32());
  c.width = static_cast<int>(r.u32());
  c.kernel = static_cast<int>(r.u32());
  const std::uint32_t heads = r.u32();
  if (heads > 16) throw Error(Errc::IoError, "checkpoint: implausible head count");
  for (std::uint32_t i = 0; i < heads; ++i) {
    HeadConfig h;
    h.channels = static_cast<int>(r.u32());
    const std::uint32_t act = r.u32();
    if (act > 2) throw Error(Errc::IoError, "checkpoint: unknown activation");
    h.activation = static_cast<Activation>(act);
    h.name = r.str();
    c.heads.push_back(std::move(h));
  }
  c.validate();
  ckpt.step = r.u64();
  ckpt.epoch = r.u64();
  ckpt.seed = r.u64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw Error(Errc::IoError, "checkpoint: implausible tensor rank");
    std::vector<int> dims(rank);
    for (auto& d : dims) d = static_cast<int>(r.u32());
    ad::Shape shape(std::move(dims));
    std::vector<float> data;
    r.f32s(data, shape.numel());
    ckpt.params.add(std::move(name), ad::Tensor(std::move(shape), std::move(data)));
  }
  if (r.u8()) {
    AdamState s;
    s.t = r.u64();
    for (const auto& p : ckpt.params.items()) {
      s.m.emplace_back();
      s.v.emplace_back();
      r.f32s(s.m.back(), p.value.numel());
      r.f32s(s.v.back(), p.value.numel());
    }
    ckpt.optimizer = std::move(s);
  }
  if (!r.done()) throw Error(Errc::IoError, "checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const NetConfig& expected) {
  Checkpoint c = load_checkpoint(path);
  if (!(c.config == expected)) {
    throw Error(Errc::CheckpointMismatch, path.string() + " holds a different network layout");
  }
  return c;
}

}  // namespace dociiw::nn
