#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvgait/evalproto/recognition.hpp"
#include "dvgait/evalproto/split.hpp"
#include "dvgait/pipeline/artifacts.hpp"
#include "dvgait/pipeline/config.hpp"

namespace dvgait::pipeline {

/// A check performed by a subcommand did not hold (exit code 1).
class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusSummary {
  std::size_t cells = 0;
  std::size_t geis = 0;
};

/// Renders the silhouette corpus and its GEI cache.
CorpusSummary gen_data(const RunConfig& config);

/// Original GEIs of every corpus cell (cache-backed).
std::vector<gei::Gei> load_original_geis(const RunConfig& config);
/// Train/test subject ids and gallery/probe sequences.
evalproto::SplitSpec split_spec(const RunConfig& config, const std::vector<gei::Gei>& originals);

struct GanSummary {
  dvgan::TrainResult training;
  double first_epoch_l1 = 0;
  double last_epoch_l1 = 0;
  /// Eval-mode decode(encode(x)) error over test-subject GEIs.
  double heldout_l1 = 0;
  double seconds = 0;
};

/// Trains the GAN on train-subject GEIs; writes checkpoints, losses.csv and summary.json.
GanSummary train_gan(const RunConfig& config);

struct SynthSummary {
  std::size_t originals = 0;
  std::size_t synthesized = 0;
  std::size_t warnings = 0;
};

/// Dense-view set of the train subjects from the trained generator.
SynthSummary synth(const RunConfig& config);

enum class TrainingSet { og, dv };
TrainingSet parse_training_set(const std::string& text);
std::string training_set_name(TrainingSet set);

struct CnnSummary {
  featnet::FeatTrainResult training;
  std::size_t originals = 0;
  std::size_t synthesized = 0;
  double seconds = 0;
};

/// Trains the feature CNN on originals (og) or originals plus the dense set (dv).
CnnSummary train_cnn(const RunConfig& config, TrainingSet set);

struct RunEvaluation {
  std::string run;
  evalproto::RecognitionMatrix matrix;
  std::vector<double> probe_means;
  double cross_view_mean = 0;
  double diagonal_mean = 0;
};

struct EvalSummary {
  std::vector<RunEvaluation> runs;
  /// First run minus second run, present when two runs are given.
  std::optional<evalproto::DeltaReport> delta;
};

/// Table-style matrix and summary per run, plus a delta report for two runs.
/// With `oracle`, every matrix is rechecked by exhaustive search and a
/// mismatch raises AssertionFailure.
EvalSummary evaluate(const RunConfig& config, const std::vector<std::string>& runs, bool oracle);

struct MidpointCase {
  std::string subject;
  double lower = 0, upper = 0;
  double morph_l1 = 0, gan_l1 = 0;
};

struct MorphSummary {
  std::vector<MidpointCase> midpoints;
  int gan_wins = 0;
  double win_rate = 0;
  double morph_mean_l1 = 0, gan_mean_l1 = 0;
  std::size_t grid_rows = 0;
};

/// Grid of [from | morphs | GAN syntheses | to | ground truth] rows for test
/// subjects, plus halfway morph-vs-GAN errors on every adjacent pair of every
/// test subject's first sequence, scored against rendered ground truth.
MorphSummary morph_demo(const RunConfig& config);

/// Exhaustive nearest-neighbour recomputation of rank1_matrix.
evalproto::RecognitionMatrix brute_force_rank1(const std::vector<evalproto::Embedding>& gallery,
                                               const std::vector<evalproto::Embedding>& probe,
                                               evalproto::Metric metric);

}  // namespace dvgait::pipeline
