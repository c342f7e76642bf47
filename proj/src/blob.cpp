#include "tw/blob.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tw {

namespace {

constexpr char kMagic[8] = {'T', 'W', 'B', 'L', 'O', 'B', '1', '\n'};

void put_u32(std::string& out, uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  out.append(b, 4);
}

uint32_t get_u32(const std::string& in, size_t off) {
  if (off + 4 > in.size()) throw std::runtime_error("blob: truncated file");
  const auto* p = reinterpret_cast<const unsigned char*>(in.data() + off);
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

const std::vector<float>& Blob::array(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return v;
  throw std::runtime_error("blob: missing array '" + name + "'");
}

bool Blob::has_array(const std::string& name) const {
  for (const auto& [n, v] : arrays)
    if (n == name) return true;
  return false;
}

void write_blob(const std::filesystem::path& path, const Blob& blob) {
  nlohmann::json header = blob.header;
  nlohmann::json arrs = nlohmann::json::array();
  for (const auto& [name, values] : blob.arrays)
    arrs.push_back({{"name", name}, {"count", values.size()}});
  header["__arrays"] = arrs;
  const std::string htxt = header.dump();

  std::string out;
  out.reserve(16 + htxt.size() + 64);
  out.append(kMagic, 8);
  put_u32(out, static_cast<uint32_t>(htxt.size()));
  out.append(htxt);
  for (const auto& [name, values] : blob.arrays) {
    static_assert(sizeof(float) == 4);
    const size_t bytes = values.size() * 4;
    const size_t off = out.size();
    out.resize(off + bytes);
    if (bytes > 0) std::memcpy(out.data() + off, values.data(), bytes);
  }
  write_file_atomic(path, out);
}

Blob read_blob(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  if (in.size() < 12 || std::memcmp(in.data(), kMagic, 8) != 0)
    throw std::runtime_error("blob: bad magic in " + path.string());
  const uint32_t hlen = get_u32(in, 8);
  if (12 + static_cast<size_t>(hlen) > in.size())
    throw std::runtime_error("blob: truncated header in " + path.string());
  Blob blob;
  blob.header = nlohmann::json::parse(in.substr(12, hlen));
  size_t off = 12 + hlen;
  if (blob.header.contains("__arrays")) {
    for (const auto& a : blob.header.at("__arrays")) {
      const std::string name = a.at("name").get<std::string>();
      const size_t count = a.at("count").get<size_t>();
      if (off + count * 4 > in.size())
        throw std::runtime_error("blob: truncated payload in " + path.string());
      std::vector<float> values(count);
      if (count > 0) std::memcpy(values.data(), in.data() + off, count * 4);
      off += count * 4;
      blob.arrays.emplace_back(name, std::move(values));
    }
    blob.header.erase("__arrays");
  }
  return blob;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace tw
