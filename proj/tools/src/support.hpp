#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace uturn::cli {

namespace fs = std::filesystem;
using KeyValues = std::map<std::string, std::string>;

/// Bad flags or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Options shared by every subcommand.
struct CommonOptions {
  std::vector<std::string> argv;  // full argument list, for the manifest
  std::string out_dir;
  std::string config_path;
  std::vector<std::string> sets;  // key=value overrides
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;  // 0: hardware concurrency

  unsigned thread_count() const;
};

std::string read_file(const fs::path& path);

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::string_view bytes);

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  KeyValues config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, digest
  std::vector<std::string> outputs;                          // relative paths

  std::string to_json() const;
};

/// Output directory that records every written file in the manifest.
/// `write` may be called from several threads.
class OutputDir {
 public:
  OutputDir(fs::path root, RunManifest& manifest);

  void write(const std::string& relative, std::string_view text);
  /// Writes manifest.json; outputs are listed in sorted order.
  void finish();

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  RunManifest& manifest_;
  std::mutex mutex_;
};

/// Reads an input file and records its digest.
std::string read_input(const fs::path& path, RunManifest& manifest);

/// Config file (if any) with `--set` overrides applied on top.
KeyValues load_config(const CommonOptions& common, RunManifest& manifest);

/// Typed access to config keys; every accessor removes the key, so
/// anything left afterwards is unknown.
class ConfigReader {
 public:
  explicit ConfigReader(KeyValues kv) : kv_(std::move(kv)) {}

  std::string get(const std::string& key, const std::string& fallback);
  double get(const std::string& key, double fallback);
  std::size_t get(const std::string& key, std::size_t fallback);
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback);

  /// Throws UsageError naming the first unconsumed key.
  void expect_consumed() const;
  KeyValues& remaining() { return kv_; }

 private:
  KeyValues kv_;
};

/// Participant of a session: explicit id, else the part of the session id
/// before "__", else the session id itself.
std::string participant_of(const std::string& session_id, const std::string& participant_id);

std::string stem_of(const fs::path& path);

/// CSV cell for an optional number (empty when absent or non-finite).
std::string cell(const std::optional<double>& v);
std::string cell_fixed(const std::optional<double>& v, int decimals);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn);

}  // namespace uturn::cli

#include <atomic>
#include <thread>

namespace uturn::cli {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(threads == 0 ? 1 : threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

}  // namespace uturn::cli
