#pragma once

// Run manifest: settings, content hashes of inputs and outputs, versions.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace raregraph::cli {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

struct FileEntry {
  std::string name;  // relative label, never an absolute path
  std::filesystem::path path;
};

struct Manifest {
  std::string command;
  nlohmann::json settings;
  std::vector<FileEntry> inputs;
  std::vector<FileEntry> outputs;
};

// Writes manifest.json into `dir`. No timestamps, so equal runs give equal bytes.
void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);

}  // namespace raregraph::cli
