#include "dvgait/pipeline/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "dvgait/numgrad/parallel.hpp"

namespace dvgait::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

MissingArtifact::MissingArtifact(const fs::path& path, const std::string& producer)
    : std::runtime_error("missing prerequisite " + path.string() + " (run `" + producer + "` first)"), path_(path) {}

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw MissingArtifact(path, producer);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void record_step(const RunConfig& config, const std::string& step, const json& details) {
  fs::create_directories(config.output);
  write_text(config.output / kEffectiveConfig, to_json(config));

  const fs::path path = config.output / kRunManifest;
  json manifest = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      manifest = json::parse(in);
    } catch (const json::exception&) {
      manifest = json::object();
    }
  }
  manifest["seed"] = config.seed;
  manifest["threads"] = numgrad::num_threads();
  const char* env = std::getenv("DVGAIT_THREADS");
  manifest["threads_env"] = env ? json(env) : json(nullptr);
  manifest["version"] = kVersion;
  manifest["compiler"] = __VERSION__;
  manifest["steps"][step] = details;
  write_text(path, manifest.dump(2) + "\n");
}

}  // namespace dvgait::pipeline
