#include "manifest.hpp"

#include <algorithm>

#include <spdlog/fmt/fmt.h>

#include "strife/errors.hpp"
#include "strife/text.hpp"

namespace strife::cli {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const RunManifest& m) {
  json j{{"command", m.command},
         {"key", m.key},
         {"config", m.config},
         {"inputs", m.inputs},
         {"outputs", m.outputs},
         {"started_at", m.started_at},
         {"finished_at", m.finished_at},
         {"seconds", m.seconds},
         {"previous", nullptr},
         {"details", m.details}};
  if (m.previous) j["previous"] = *m.previous;
  return j;
}

std::string hash_input(const fs::path& path) {
  if (!fs::is_directory(path)) return text::sha256_file(path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& f : files) {
    listing += fs::relative(f, path).generic_string() + '\t' + text::sha256_file(f) + '\n';
  }
  return text::sha256_hex(listing);
}

std::string manifest_key(const RunManifest& m) {
  const json keyed{{"command", m.command}, {"config", m.config}, {"inputs", m.inputs}};
  return text::sha256_hex(keyed.dump()).substr(0, 16);
}

fs::path write_manifest(RunManifest& m, const fs::path& dir) {
  m.key = manifest_key(m);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create manifest directory " + dir.string() + ": " + ec.message());

  const std::string prefix = m.command + "-" + m.key + "-";
  std::vector<std::string> prior;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && entry.path().extension() == ".json") prior.push_back(name);
  }
  std::sort(prior.begin(), prior.end());
  if (!prior.empty()) m.previous = prior.back();
  const auto path = dir / fmt::format("{}{:04}.json", prefix, prior.size() + 1);
  text::write_file_atomic(path, to_json(m).dump(2) + "\n");
  return path;
}

}  // namespace strife::cli
