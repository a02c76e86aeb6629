#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "uturn/cli.hpp"
#include "uturn/common.hpp"
#include "uturn/csv.hpp"

namespace uturn::cli {

unsigned CommonOptions::thread_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex_digest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "uturn";
  j["version"] = std::string(version());
  j["command"] = command;
  j["argv"] = argv;
  j["seed"] = seed;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) j["config"][k] = v;
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& [path, digest] : inputs) {
    j["inputs"].push_back({{"path", path}, {"fnv1a64", digest}});
  }
  auto sorted = outputs;
  std::sort(sorted.begin(), sorted.end());
  j["outputs"] = sorted;
  return j.dump(2) + "\n";
}

OutputDir::OutputDir(fs::path root, RunManifest& manifest)
    : root_(std::move(root)), manifest_(manifest) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error("cannot create output directory '" + root_.string() + "'");
}

void OutputDir::write(const std::string& relative, std::string_view text) {
  const fs::path path = root_ / relative;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
  const std::lock_guard lock(mutex_);
  manifest_.outputs.push_back(relative);
}

void OutputDir::finish() {
  const fs::path path = root_ / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << manifest_.to_json();
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

std::string read_input(const fs::path& path, RunManifest& manifest) {
  std::string text = read_file(path);
  manifest.inputs.emplace_back(path.string(), hex_digest(text));
  return text;
}

KeyValues load_config(const CommonOptions& common, RunManifest& manifest) {
  KeyValues kv;
  if (!common.config_path.empty()) {
    try {
      kv = parse_key_values(read_input(common.config_path, manifest));
    } catch (const Error& e) {
      throw UsageError(std::string("config: ") + e.what());
    }
  }
  for (const auto& s : common.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects key=value, got '" + s + "'");
    }
    kv[std::string(trim(std::string_view(s).substr(0, eq)))] =
        std::string(trim(std::string_view(s).substr(eq + 1)));
  }
  return kv;
}

std::string ConfigReader::get(const std::string& key, const std::string& fallback) {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::string v = it->second;
  kv_.erase(it);
  return v;
}

double ConfigReader::get(const std::string& key, double fallback) {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    const double v = parse_double(it->second);
    kv_.erase(it);
    return v;
  } catch (const ParseError&) {
    throw UsageError("config key '" + key + "' expects a number, got '" + it->second + "'");
  }
}

std::size_t ConfigReader::get(const std::string& key, std::size_t fallback) {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    const long v = parse_long(it->second);
    if (v < 0) throw ParseError("negative");
    kv_.erase(it);
    return static_cast<std::size_t>(v);
  } catch (const ParseError&) {
    throw UsageError("config key '" + key + "' expects a count, got '" + it->second + "'");
  }
}

std::vector<std::string> ConfigReader::get_list(const std::string& key,
                                                const std::vector<std::string>& fallback) {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<std::string> out;
  for (const auto part : split(it->second, ',')) {
    const auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  kv_.erase(it);
  return out;
}

void ConfigReader::expect_consumed() const {
  if (!kv_.empty()) throw UsageError("unknown config key '" + kv_.begin()->first + "'");
}

std::string participant_of(const std::string& session_id, const std::string& participant_id) {
  if (!participant_id.empty()) return participant_id;
  const auto sep = session_id.find("__");
  if (sep != std::string::npos && sep > 0) return session_id.substr(0, sep);
  return session_id;
}

std::string stem_of(const fs::path& path) { return path.stem().string(); }

std::string cell(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? format_double(*v) : std::string();
}

std::string cell_fixed(const std::optional<double>& v, int decimals) {
  return v && std::isfinite(*v) ? format_fixed(*v, decimals) : std::string();
}

}  // namespace uturn::cli
