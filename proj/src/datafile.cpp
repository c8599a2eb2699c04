#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "advgo/selfplay.hpp"

namespace advgo {

// Segment layout (little-endian):
//   "ADVGODAT" | u32 version | u32 board_size | u32 planes | u32 globals | u32 policy_len | u64 rows
//   | rows * { u8 planes[size^2 * planes] | f32 globals | f32 policy | f32 value | f32 weight | i64 tag }

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'G', 'O', 'D', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;

void put(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f32(std::string& out, float f) { put(out, std::bit_cast<std::uint32_t>(f), 4); }

struct Cursor {
  const std::string& d;
  std::size_t pos = 0;
  std::uint64_t get(int bytes) {
    if (pos + bytes > d.size()) throw std::runtime_error("data segment truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(d[pos + i])) << (8 * i);
    pos += bytes;
    return v;
  }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
};

}  // namespace

void write_segment(const std::string& path, const std::vector<TrainingRow>& rows) {
  const int size = rows.empty() ? 0 : rows.front().board_size;
  const std::size_t area = static_cast<std::size_t>(size) * size;
  const std::size_t planes = area == 0 ? 0 : rows.front().planes.size() / area;
  const std::size_t globals = rows.empty() ? 0 : rows.front().globals.size();
  const std::size_t policy = rows.empty() ? 0 : rows.front().policy_target.size();
  std::string out(kMagic, kMagic + 8);
  put(out, kVersion, 4);
  put(out, static_cast<std::uint32_t>(size), 4);
  put(out, planes, 4);
  put(out, globals, 4);
  put(out, policy, 4);
  put(out, rows.size(), 8);
  for (const TrainingRow& r : rows) {
    if (r.board_size != size || r.planes.size() != area * planes || r.globals.size() != globals ||
        r.policy_target.size() != policy) {
      throw ShapeMismatch("a data segment holds rows of one shape only");
    }
    out.append(reinterpret_cast<const char*>(r.planes.data()), r.planes.size());
    for (float g : r.globals) put_f32(out, g);
    for (float p : r.policy_target) put_f32(out, p);
    put_f32(out, r.value_target);
    put_f32(out, r.weight);
    put(out, static_cast<std::uint64_t>(r.tag), 8);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("failed writing " + path);
}

std::vector<TrainingRow> read_segment(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (data.size() < 8 || std::memcmp(data.data(), kMagic, 8) != 0) throw std::runtime_error("not a data segment: " + path);
  Cursor c{data, 8};
  const auto version = c.get(4);
  if (version != kVersion) throw VersionMismatch("data segment version " + std::to_string(version));
  const int size = static_cast<int>(c.get(4));
  const std::size_t planes = c.get(4), globals = c.get(4), policy = c.get(4);
  const std::uint64_t count = c.get(8);
  const std::size_t plane_bytes = static_cast<std::size_t>(size) * size * planes;
  std::vector<TrainingRow> rows;
  rows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    TrainingRow r;
    r.board_size = size;
    if (c.pos + plane_bytes > data.size()) throw std::runtime_error("data segment truncated");
    r.planes.assign(data.begin() + static_cast<std::ptrdiff_t>(c.pos),
                    data.begin() + static_cast<std::ptrdiff_t>(c.pos + plane_bytes));
    c.pos += plane_bytes;
    r.globals.resize(globals);
    for (auto& g : r.globals) g = c.f32();
    r.policy_target.resize(policy);
    for (auto& p : r.policy_target) p = c.f32();
    r.value_target = c.f32();
    r.weight = c.f32();
    r.tag = static_cast<std::int64_t>(c.get(8));
    rows.push_back(std::move(r));
  }
  if (c.pos != data.size()) throw std::runtime_error("trailing bytes in data segment");
  return rows;
}

void write_manifest(const std::string& path, const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (const auto& [k, v] : entries) f << k << " = " << v << "\n";
  if (!f) throw std::runtime_error("failed writing " + path);
}

std::vector<std::pair<std::string, std::string>> read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    out.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return out;
}

}  // namespace advgo
