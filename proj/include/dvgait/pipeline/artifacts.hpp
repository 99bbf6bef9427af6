#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dvgait/pipeline/config.hpp"

namespace dvgait::pipeline {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kEffectiveConfig = "config.effective.json";
inline constexpr const char* kRunManifest = "run_manifest.json";

/// An upstream artifact is absent (exit code 3).
class MissingArtifact : public std::runtime_error {
 public:
  MissingArtifact(const std::filesystem::path& path, const std::string& producer);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Where every stage reads and writes, all under the configured output directory.
struct Layout {
  explicit Layout(std::filesystem::path root) : root(std::move(root)) {}
  std::filesystem::path root;

  std::filesystem::path corpus() const { return root / "corpus"; }
  std::filesystem::path gei_cache() const { return root / "gei"; }
  std::filesystem::path gan() const { return root / "gan"; }
  std::filesystem::path dense() const { return root / "dense"; }
  std::filesystem::path cnn(const std::string& set) const { return root / "cnn" / set; }
  std::filesystem::path eval() const { return root / "eval"; }
  std::filesystem::path morph() const { return root / "morph"; }
};

/// Throws MissingArtifact naming `path` and the subcommand that makes it.
void require(const std::filesystem::path& path, const std::string& producer);

/// Writes config.effective.json and merges `details` under steps.<step> in
/// run_manifest.json, together with seed, thread count and versions.
void record_step(const RunConfig& config, const std::string& step, const nlohmann::json& details);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dvgait::pipeline
