#include "adaptaa/t4f.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace adaptaa {

namespace {

constexpr std::array<char, 4> kMagic = {'T', '4', 'F', '1'};
constexpr const char* kManifestHeader = "T4F-MANIFEST 1";

void put_u32(std::ostream& os, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xffu),
                                 static_cast<char>((v >> 8) & 0xffu),
                                 static_cast<char>((v >> 16) & 0xffu),
                                 static_cast<char>((v >> 24) & 0xffu)};
  os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw FormatError("T4F: truncated stream");
  }
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
         (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

std::uint32_t checked_extent(std::size_t v) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("T4F: extent exceeds 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

// Names become file stems; keep them to a conservative character set.
void check_name(const std::string& name) {
  if (name.empty()) throw FormatError("checkpoint: empty tensor name");
  for (char ch : name) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                    (ch >= '0' && ch <= '9') || ch == '.' || ch == '_' ||
                    ch == '-';
    if (!ok) throw FormatError("checkpoint: invalid tensor name '" + name + "'");
  }
}

}  // namespace

void write_t4f(std::ostream& os, const Tensor& t) {
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, checked_extent(t.n()));
  put_u32(os, checked_extent(t.c()));
  put_u32(os, checked_extent(t.h()));
  put_u32(os, checked_extent(t.w()));
  for (float v : t.data()) put_u32(os, std::bit_cast<std::uint32_t>(v));
  if (!os) throw FormatError("T4F: write failed");
}

Tensor read_t4f(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kMagic) {
    throw FormatError("T4F: bad magic");
  }
  Shape s;
  s.n = get_u32(is);
  s.c = get_u32(is);
  s.h = get_u32(is);
  s.w = get_u32(is);
  std::vector<float> data(s.size());
  for (auto& v : data) v = std::bit_cast<float>(get_u32(is));
  return Tensor(s, std::move(data));
}

void save_t4f(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  write_t4f(os, t);
}

Tensor load_t4f(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_t4f(is);
}

void Checkpoint::put(const std::string& name, Tensor t) {
  check_name(name);
  for (auto& [n, v] : entries_) {
    if (n == name) {
      v = std::move(t);
      return;
    }
  }
  entries_.emplace_back(name, std::move(t));
}

void Checkpoint::put_vector(const std::string& name,
                            const std::vector<float>& v) {
  put(name, Tensor(Shape{1, v.size(), 1, 1}, v));
}

bool Checkpoint::contains(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return true;
  }
  return false;
}

const Tensor& Checkpoint::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw FormatError("checkpoint: missing tensor '" + name + "'");
}

std::vector<float> Checkpoint::get_vector(const std::string& name) const {
  const auto& v = get(name).vec();
  return {v.begin(), v.end()};
}

void Checkpoint::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw FormatError("cannot write manifest in " + dir.string());
  manifest << kManifestHeader << '\n';
  for (const auto& [name, t] : entries_) {
    const std::string file = name + ".t4f";
    save_t4f(dir / file, t);
    manifest << name << ' ' << file << '\n';
  }
}

Checkpoint Checkpoint::load(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw FormatError("no manifest.txt in " + dir.string());
  std::string line;
  if (!std::getline(manifest, line) || line != kManifestHeader) {
    throw FormatError("checkpoint: bad manifest header in " + dir.string());
  }
  Checkpoint ck;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, file;
    if (!(ls >> name >> file)) {
      throw FormatError("checkpoint: malformed manifest line '" + line + "'");
    }
    ck.put(name, load_t4f(dir / file));
  }
  return ck;
}

}  // namespace adaptaa
