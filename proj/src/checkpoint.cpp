#include "fetchrl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace fetchrl {

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error("checkpoint: truncated file");
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void magic() {
    need(sizeof(kCheckpointMagic));
    if (std::memcmp(in_.data() + pos_, kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
      throw Error("checkpoint: bad magic");
    }
    pos_ += sizeof(kCheckpointMagic);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  const NetworkSpec& s = ckpt.params.spec();
  w.i32(s.input_channels);
  w.i32(s.window);
  w.i32(s.hidden_units);
  w.i32(s.context_units);
  w.i32(s.action_count);
  w.u32(static_cast<std::uint32_t>(s.conv_layers.size()));
  for (const auto& l : s.conv_layers) {
    w.i32(l.out_channels);
    w.i32(l.kernel);
    w.i32(l.stride);
  }
  w.u64(ckpt.params.size());
  for (double v : ckpt.params.values()) w.f64(v);
  w.u8(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    w.u64(static_cast<std::uint64_t>(ckpt.optimizer->step));
    w.u64(ckpt.optimizer->m.size());
    for (double v : ckpt.optimizer->m) w.f64(v);
    for (double v : ckpt.optimizer->v) w.f64(v);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.magic();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error("checkpoint: unsupported format version " + std::to_string(version));
  }
  NetworkSpec s;
  s.input_channels = r.i32();
  s.window = r.i32();
  s.hidden_units = r.i32();
  s.context_units = r.i32();
  s.action_count = r.i32();
  const std::uint32_t layers = r.u32();
  if (layers > 64) throw Error("checkpoint: implausible conv layer count");
  s.conv_layers.clear();
  for (std::uint32_t i = 0; i < layers; ++i) {
    ConvLayerSpec l;
    l.out_channels = r.i32();
    l.kernel = r.i32();
    l.stride = r.i32();
    s.conv_layers.push_back(l);
  }
  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.params = PolicyParams(s);
  const std::uint64_t n = r.u64();
  if (n != ckpt.params.size()) {
    throw ShapeMismatch("checkpoint: stores " + std::to_string(n) +
                        " parameters but its network spec implies " +
                        std::to_string(ckpt.params.size()));
  }
  for (double& v : ckpt.params.values()) v = r.f64();
  if (r.u8() == 1) {
    AdamState st;
    st.step = static_cast<std::int64_t>(r.u64());
    const std::uint64_t m = r.u64();
    if (m != n) throw ShapeMismatch("checkpoint: optimizer state size mismatch");
    st.m.resize(m);
    st.v.resize(m);
    for (double& v : st.m) v = r.f64();
    for (double& v : st.v) v = r.f64();
    ckpt.optimizer = std::move(st);
  }
  if (!r.done()) throw Error("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write checkpoint " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("short write to checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

std::string describe(const NetworkSpec& spec) {
  std::ostringstream os;
  os << spec.input_channels << "x" << spec.window << "x" << spec.window << " input";
  for (const auto& l : spec.conv_layers) {
    os << ", conv " << l.out_channels << "@" << l.kernel << "x" << l.kernel << "/s" << l.stride;
  }
  os << ", hidden " << spec.hidden_units << ", context " << spec.context_units << ", actions "
     << spec.action_count;
  return os.str();
}

}  // namespace fetchrl
