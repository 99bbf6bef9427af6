#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dvgait/featnet/feature_net.hpp"
#include "dvgait/numgrad/optim.hpp"

namespace dvgait::featnet {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatTrainConfig {
  int epochs = 10;
  /// Originals per batch; DV training adds as many synthesized GEIs.
  int batch_size = 32;
  numgrad::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  double gamma = 0.008;
  double center_rate = 0.5;
  std::uint64_t seed = 1;
  FeatureNetConfig net;
};

void validate(const FeatTrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double softmax = 0, center = 0, total = 0;
  /// Running softmax accuracy over the epoch's batches.
  double accuracy = 0;
};

/// Subject id -> class index, in sorted id order.
std::map<std::string, int> label_map(const std::vector<gei::Gei>& originals);

struct FeatureModel {
  FeatureModel(const FeatureNetConfig& net, int classes, std::uint64_t seed);
  std::unique_ptr<FeatureNet> net;
  std::unique_ptr<ClassifierHead> head;
  Tensor centers;  // [classes, embedding]
  std::map<std::string, int> labels;
};

struct FeatTrainResult {
  std::vector<EpochRecord> history;
  /// Eval-mode classification accuracy on the original training GEIs.
  double train_accuracy = 0;
};

inline constexpr const char* kFeatureFile = "features.dvgw";
inline constexpr const char* kHeadFile = "head.dvgw";
inline constexpr const char* kCentersFile = "centers.dvgw";
inline constexpr const char* kHistoryFile = "history.csv";

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains on `originals`, adding an equal number of `synthesized` GEIs to
/// every batch when that set is non-empty. Synthesized GEIs use the label
/// of their subject.
FeatTrainResult train_features(FeatureModel& model, const std::vector<gei::Gei>& originals,
                               const std::vector<gei::Gei>& synthesized, const FeatTrainConfig& config,
                               const std::filesystem::path& out_dir = {}, const EpochCallback& on_epoch = {});

double classification_accuracy(FeatureModel& model, const std::vector<gei::Gei>& geis);

struct Embedding {
  std::vector<float> values;
  std::string subject;
  std::string sequence;
  double view_deg = 0.0;
  gei::Origin origin = gei::Origin::original;
};

/// Eval-mode embeddings, one per GEI, in input order.
std::vector<Embedding> extract(FeatureNet& net, const std::vector<gei::Gei>& geis, int batch_size = 64);
std::vector<Embedding> extract(const std::filesystem::path& checkpoint, const FeatureNetConfig& config,
                               const std::vector<gei::Gei>& geis);

void write_embeddings_csv(const std::filesystem::path& path, const std::vector<Embedding>& embeddings);
std::vector<Embedding> read_embeddings_csv(const std::filesystem::path& path);

}  // namespace dvgait::featnet
