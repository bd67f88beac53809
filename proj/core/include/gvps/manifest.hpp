#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gvps/trainer.hpp"

namespace gvps {

std::string code_version();

// Record of one run. begin() writes it with complete=false before any work
// starts; finish() rewrites it once every listed output exists.
struct RunManifest {
  std::string command;
  std::string config_text;
  std::string version = code_version();
  std::uint64_t seed = 0;
  std::string started_at;  // UTC, ISO 8601
  std::string finished_at;
  std::vector<std::string> outputs;
  bool complete = false;

  TrainConfig config() const;  // parses config_text

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);

  void begin(const std::filesystem::path& path);
  // Throws StateError naming the first missing output.
  void finish(const std::filesystem::path& path);
};

RunManifest load_manifest(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace gvps
