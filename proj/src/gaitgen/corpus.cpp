#include "dvgait/gaitgen/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dvgait/imageio/png.hpp"

namespace dvgait::gaitgen {

namespace fs = std::filesystem;

std::string view_label(double view_deg) {
  char buf[32];
  if (view_deg == std::round(view_deg)) {
    std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(std::lround(view_deg)));
  } else {
    std::snprintf(buf, sizeof buf, "%g", view_deg);
  }
  return buf;
}

std::string sequence_label(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "nm-%02d", index);
  return buf;
}

fs::path frame_path(const fs::path& root, const ManifestEntry& entry, int frame) {
  char name[32];
  std::snprintf(name, sizeof name, "frame-%04d.png", frame);
  return root / entry.subject / entry.sequence / view_label(entry.view_deg) / name;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  for (const auto& e : entries) {
    out << e.subject << '\t' << e.sequence << '\t' << view_label(e.view_deg) << '\t' << e.frame_count << '\n';
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open manifest");
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    ManifestEntry e;
    std::string view, count;
    if (!std::getline(fields, e.subject, '\t') || !std::getline(fields, e.sequence, '\t') ||
        !std::getline(fields, view, '\t') || !std::getline(fields, count)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    try {
      e.view_deg = std::stod(view);
      e.frame_count = std::stoi(count);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<SubjectSpec> build_corpus(const CorpusConfig& config, const fs::path& out_dir) {
  if (config.subjects < 1 || config.sequences < 1 || config.views.empty()) {
    throw std::invalid_argument("build_corpus: need subjects, sequences and views");
  }
  auto subjects = make_subjects(config.subjects, config.seed);
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> manifest;
  for (const auto& spec : subjects) {
    for (int s = 1; s <= config.sequences; ++s) {
      const std::string seq_id = sequence_label(s);
      for (double view : config.views) {
        const auto seq = generate_sequence(spec, view, seq_id, config.cycles, config.frames_per_cycle, config.canvas);
        ManifestEntry entry{spec.subject_id, seq_id, view, static_cast<int>(seq.frames.size())};
        for (std::size_t f = 0; f < seq.frames.size(); ++f) {
          const auto& fr = seq.frames[f];
          imageio::write_png(frame_path(out_dir, entry, static_cast<int>(f)),
                             imageio::GrayImage{fr.width, fr.height, fr.pixels}, 1);
        }
        manifest.push_back(std::move(entry));
      }
    }
  }
  write_manifest(out_dir / kManifestName, manifest);
  std::ofstream(out_dir / kSubjectsName, std::ios::trunc) << subjects_to_json(subjects);
  return subjects;
}

SilhouetteSequence load_sequence(const fs::path& root, const ManifestEntry& entry) {
  SilhouetteSequence seq;
  seq.subject_id = entry.subject;
  seq.sequence_id = entry.sequence;
  seq.view_deg = entry.view_deg;
  seq.frames_per_cycle = entry.frame_count;
  for (int f = 0; f < entry.frame_count; ++f) {
    const auto path = frame_path(root, entry, f);
    if (!fs::exists(path)) throw std::runtime_error("missing frame " + path.string());
    auto img = imageio::read_png(path);
    BinaryFrame frame{img.width, img.height, std::vector<std::uint8_t>(img.pixels.size())};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) frame.pixels[i] = img.pixels[i] >= 128 ? 1 : 0;
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace dvgait::gaitgen
