#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace temos::cli {

// SHA-1 of "blob <size>\0<bytes>", as git hash-object computes it.
std::string git_blob_hash(std::string_view bytes);
std::string git_blob_hash_file(const std::filesystem::path& path);
// Files are hashed individually; a directory hashes the sorted
// "<relative path> <blob hash>\n" lines of every regular file below it.
std::string content_hash(const std::filesystem::path& path);

std::string utc_timestamp();

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // flag echo
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // name -> content hash
  std::string started;
  std::string finished;

  void add_input(const std::string& name, const std::filesystem::path& path);
  // Writes <dir>/manifest.json, replacing any previous one.
  void write(const std::filesystem::path& dir) const;
};

}  // namespace temos::cli
