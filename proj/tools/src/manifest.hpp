#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace strife::cli {

/// Record of one command invocation, written as <dir>/<command>-<key>-<seq>.json.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  /// Input path -> SHA-256 of its contents (directories hash their sorted files).
  std::map<std::string, std::string> inputs;
  std::vector<std::string> outputs;
  std::string started_at;
  std::string finished_at;
  double seconds = 0.0;
  /// Hash of command, config and input hashes; equal keys mean an identical rerun.
  std::string key;
  /// File name of the latest earlier run with the same key.
  std::optional<std::string> previous;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json to_json(const RunManifest& manifest);

std::string hash_input(const std::filesystem::path& path);

std::string manifest_key(const RunManifest& manifest);

/// Fills key and previous, then writes the manifest atomically. Returns its path.
std::filesystem::path write_manifest(RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace strife::cli
