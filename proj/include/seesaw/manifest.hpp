#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seesaw/errors.hpp"
#include "seesaw/version.hpp"

namespace seesaw {

/// Record written next to every CLI output set. Re-running the recorded
/// argument vector reproduces the outputs byte for byte.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 0;
  std::vector<std::string> output_paths;
  std::string started;
  std::string finished;
  std::string tool_version = kVersion;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp = std::chrono::system_clock::now()) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &t);
#else
  gmtime_r(&t, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::ordered_json to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["subcommand"] = m.subcommand;
  j["argv"] = m.argv;
  j["params"] = m.params;
  j["seed"] = m.seed;
  j["output_paths"] = m.output_paths;
  j["started"] = m.started;
  j["finished"] = m.finished;
  j["tool_version"] = m.tool_version;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.params = j.at("params").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.output_paths = j.at("output_paths").get<std::vector<std::string>>();
  m.started = j.at("started").get<std::string>();
  m.finished = j.at("finished").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write manifest '" + path.string() + "'");
  out << to_json(m).dump(2) << '\n';
}

}  // namespace seesaw
