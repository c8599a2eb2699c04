#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "advgo/nnet.hpp"

namespace advgo {

// Layout (all integers little-endian):
//   "ADVGONET" | u32 version | u32 config_len | config text | i64 step_count
//   | u32 tensor_count | { u32 name_len | name | u32 rows | u32 cols | f32 data[rows*cols] }*
//   | u64 fnv1a checksum of every preceding byte

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'G', 'O', 'N', 'E', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a(const std::string& bytes, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(const std::string& data, std::size_t end) : d_(data), end_(end) {}
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CorruptCheckpoint("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(d_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(d_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = d_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& d_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const NetworkParameters& params, const std::string& path) {
  std::string out(kMagic, kMagic + 8);
  put_u32(out, kFormatVersion);
  const std::string cfg = params.config.to_text();
  put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  put_u64(out, static_cast<std::uint64_t>(params.step_count));
  put_u32(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& [name, t] : params.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (Eigen::Index i = 0; i < t.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(t.data()[i]));
  }
  put_u64(out, fnv1a(out, out.size()));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("failed writing checkpoint " + path);
}

NetworkParameters load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path);
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (data.size() < 8 + 4 + 8 || std::memcmp(data.data(), kMagic, 8) != 0) {
    throw CorruptCheckpoint("not a checkpoint file: " + path);
  }
  const std::size_t body = data.size() - 8;
  {
    Reader r(data, data.size());
    r.bytes(8);
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion) {
      throw VersionMismatch("checkpoint format version " + std::to_string(version) + ", expected " +
                            std::to_string(kFormatVersion));
    }
  }
  Reader checksum(data, data.size());
  checksum.bytes(body);
  if (checksum.u64() != fnv1a(data, body)) throw CorruptCheckpoint("checkpoint checksum mismatch: " + path);

  Reader r(data, body);
  r.bytes(8);
  r.u32();
  NetworkParameters p;
  try {
    p.config = NetworkConfig::from_text(r.bytes(r.u32()));
  } catch (const std::invalid_argument& e) {
    throw CorruptCheckpoint(std::string("bad checkpoint config: ") + e.what());
  }
  p.step_count = static_cast<std::int64_t>(r.u64());
  const std::uint32_t count = r.u32();
  const auto shapes = parameter_shapes(p.config);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.u32());
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    auto it = shapes.find(name);
    if (it == shapes.end() || it->second.first != static_cast<int>(rows) ||
        it->second.second != static_cast<int>(cols)) {
      throw ShapeMismatch("checkpoint tensor " + name + " does not match its config");
    }
    ad::Matrix<float> m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = std::bit_cast<float>(r.u32());
    p.tensors.emplace(std::move(name), std::move(m));
  }
  if (r.pos() != body) throw CorruptCheckpoint("trailing bytes in checkpoint");
  if (p.tensors.size() != shapes.size()) throw ShapeMismatch("checkpoint is missing tensors");
  return p;
}

NetworkParameters load_checkpoint(const std::string& path, const NetworkConfig& expected) {
  NetworkParameters p = load_checkpoint(path);
  if (!(p.config == expected)) throw ShapeMismatch("checkpoint config differs from the expected network");
  return p;
}

}  // namespace advgo
