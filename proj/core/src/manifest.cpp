#include "gvps/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gvps/config.hpp"
#include "gvps/error.hpp"

#ifndef GVPS_VERSION
#define GVPS_VERSION "0.0.0"
#endif

namespace gvps {

namespace {

constexpr const char* kModule = "harness";

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw InputError(kModule, "cannot write " + path.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string code_version() { return GVPS_VERSION; }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TrainConfig RunManifest::config() const { return parse_config(config_text); }

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = version;
  j["seed"] = seed;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["complete"] = complete;
  j["outputs"] = outputs;
  j["config"] = config_text;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.complete = j.at("complete").get<bool>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.config_text = j.at("config").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(kModule, std::string("bad manifest: ") + e.what());
  }
}

void RunManifest::begin(const std::filesystem::path& path) {
  complete = false;
  if (started_at.empty()) started_at = utc_timestamp();
  finished_at.clear();
  write_atomic(path, to_json());
}

void RunManifest::finish(const std::filesystem::path& path) {
  for (const auto& out : outputs) {
    if (!std::filesystem::exists(out)) throw StateError(kModule, "run output missing: " + out);
  }
  finished_at = utc_timestamp();
  complete = true;
  write_atomic(path, to_json());
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(kModule, "cannot read manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return RunManifest::from_json(ss.str());
}

}  // namespace gvps
