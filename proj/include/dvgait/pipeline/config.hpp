#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvgait/dvgan/synthesis.hpp"
#include "dvgait/dvgan/training.hpp"
#include "dvgait/evalproto/recognition.hpp"
#include "dvgait/featnet/training.hpp"
#include "dvgait/gaitgen/corpus.hpp"

namespace dvgait::pipeline {

/// Malformed or inconsistent run configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalConfig {
  /// The first `train_subjects` ids (sorted) train; the rest are test subjects.
  int train_subjects = 2;
  std::vector<std::string> gallery_sequences{"nm-01"};
  std::vector<std::string> probe_sequences{"nm-02"};
  evalproto::Metric metric = evalproto::Metric::euclidean;
};

struct MorphConfig {
  double from_view = 0;
  double to_view = 90;
  /// Blend weights given to `from_view`.
  std::vector<double> alphas{18.0 / 90, 36.0 / 90, 54.0 / 90, 72.0 / 90};
  /// Test subjects shown in the grid.
  int subjects = 4;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output = "runs/default";
  gaitgen::CorpusConfig corpus;
  dvgan::TrainConfig gan;
  /// Empty pairs means adjacent views.
  dvgan::SynthesisConfig synth;
  featnet::FeatTrainConfig cnn;
  EvalConfig eval;
  MorphConfig morph;
};

/// Parses a JSON document. Unknown keys, wrong types and out-of-range values
/// raise ConfigError. The top-level seed drives corpus, GAN and CNN seeds;
/// GAN views follow the corpus views.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved JSON, suitable for parse_config.
std::string to_json(const RunConfig& config);

/// Cross-section checks (view spacing, split sizes, sequence ids, module
/// configs). Throws ConfigError.
void validate(const RunConfig& config);

}  // namespace dvgait::pipeline
