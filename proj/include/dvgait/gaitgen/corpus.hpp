#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dvgait/gaitgen/render.hpp"
#include "dvgait/gaitgen/subject.hpp"

namespace dvgait::gaitgen {

struct CorpusConfig {
  int subjects = 4;
  std::vector<double> views{0, 18, 36, 54, 72, 90, 108, 126, 144, 162, 180};
  int sequences = 2;
  int frames_per_cycle = 16;
  int cycles = 1;
  Canvas canvas{};
  std::uint64_t seed = 1;
};

/// One (subject, sequence, view) cell of a silhouette corpus.
struct ManifestEntry {
  std::string subject;
  std::string sequence;
  double view_deg = 0.0;
  int frame_count = 0;
};

/// "000", "018", ... for integral views, otherwise the shortest decimal.
std::string view_label(double view_deg);
/// Sequence ids "nm-01", "nm-02", ...
std::string sequence_label(int index);

std::filesystem::path frame_path(const std::filesystem::path& root, const ManifestEntry& entry, int frame);

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
/// Parses `subject<TAB>sequence<TAB>view_deg<TAB>frame_count` lines.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

inline constexpr const char* kManifestName = "manifest.tsv";
inline constexpr const char* kSubjectsName = "subjects.json";

/// Renders every cell as 1-bit PNG frames under
/// `<out>/<subject>/<seq>/<view>/frame-%04d.png`, plus manifest.tsv and
/// subjects.json. Returns the subject specs.
std::vector<SubjectSpec> build_corpus(const CorpusConfig& config, const std::filesystem::path& out_dir);

/// Loads one cell back from disk (works for external corpora in the same layout).
SilhouetteSequence load_sequence(const std::filesystem::path& root, const ManifestEntry& entry);

}  // namespace dvgait::gaitgen
