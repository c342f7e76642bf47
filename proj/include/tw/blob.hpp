#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tw {

// Shared on-disk container: magic, little-endian header length, JSON header,
// then named little-endian float32 blobs. Round-trips byte-exactly.
struct Blob {
  nlohmann::json header;
  std::vector<std::pair<std::string, std::vector<float>>> arrays;

  const std::vector<float>& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

void write_blob(const std::filesystem::path& path, const Blob& blob);
Blob read_blob(const std::filesystem::path& path);

// temp file + rename so readers never observe a partial file
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace tw
