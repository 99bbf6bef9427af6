#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dvgait/dvgan/networks.hpp"
#include "dvgait/numgrad/optim.hpp"

namespace dvgait::dvgan {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 1;
  int batch_size = 8;
  double lambda_l1 = 100.0;
  double w_d = 1.0;
  double w_m = 1.0;
  numgrad::AdamConfig generator_adam{2e-4, 0.5, 0.999, 1e-8};
  numgrad::AdamConfig critic_adam{2e-4, 0.5, 0.999, 1e-8};
  double theta_prime = 18.0;
  std::uint64_t seed = 1;
  std::vector<double> views{0, 18, 36, 54, 72, 90, 108, 126, 144, 162, 180};
  /// Synthesis pairs; empty means adjacent views.
  std::vector<std::pair<double, double>> pairs;
  GeneratorConfig generator;
  CriticConfig critic;
};

/// Throws std::invalid_argument on inconsistent settings: view spacing must
/// equal theta_prime and at least one monitor triple must exist.
void validate(const TrainConfig& config);

/// Centre views with both neighbours at +-theta_prime present.
std::vector<double> monitor_views(const std::vector<double>& views, double theta_prime);
std::vector<std::pair<double, double>> adjacent_pairs(const std::vector<double>& views);
std::vector<std::pair<double, double>> synthesis_pairs(const TrainConfig& config);

// --- losses -------------------------------------------------------------------

struct GeneratorLoss {
  Tensor total;
  double l1 = 0, adv_d = 0, adv_m = 0;
};

/// lambda_l1 * L1(x_hat, x) + w_d * bce(d, real) + w_m * bce(m, real), on logits.
GeneratorLoss generator_loss(const Tensor& x, const Tensor& x_hat, const Tensor& d_logits,
                             const Tensor& m_logits, const TrainConfig& config);

/// bce(real, 1) + bce(fake, 0), each averaged over its batch.
Tensor critic_loss(const Tensor& real_logits, const Tensor& fake_logits);

/// One update of D on (x, x) against (x, fake). `fake` is used detached.
double discriminator_step(PairCritic& discriminator, numgrad::Adam& optimizer, const Tensor& x,
                          const Tensor& fake);

/// Monitor triples, each of one subject and sequence.
struct Triple {
  const gei::Gei* lower;
  const gei::Gei* centre;
  const gei::Gei* upper;
};

/// Blends the outer views' codes halfway and decodes.
Tensor synthesize_midpoint(GeneratorNet& generator, const Tensor& lower, const Tensor& upper);

/// One update of M on (x_centre, x_centre) against (x_centre, midpoint).
double monitor_step(PairCritic& monitor, numgrad::Adam& optimizer, const Tensor& centre,
                    const Tensor& midpoint);

/// All (lower, centre, upper) triples in `geis` sharing subject and sequence.
std::vector<Triple> find_triples(const std::vector<gei::Gei>& geis, const std::vector<double>& views,
                                 double theta_prime);
/// Throws std::invalid_argument if any of the three views is missing.
Triple make_triple(const std::vector<gei::Gei>& geis, const std::string& subject,
                   const std::string& sequence, double centre, double theta_prime);

// --- training -----------------------------------------------------------------

struct LossRecord {
  int epoch = 0;
  int iter = 0;
  double l1 = 0, adv_d = 0, adv_m = 0, d_loss = 0, m_loss = 0;
};

struct TrainResult {
  std::vector<LossRecord> history;
  /// Mean L1 component per epoch.
  std::vector<double> epoch_l1;
};

inline constexpr const char* kGeneratorFile = "generator.dvgw";
inline constexpr const char* kDiscriminatorFile = "discriminator.dvgw";
inline constexpr const char* kMonitorFile = "monitor.dvgw";
inline constexpr const char* kLossFile = "losses.csv";

using IterationCallback = std::function<void(const LossRecord&)>;

/// Alternating D, M and G updates. Writes checkpoints and the loss CSV to
/// `out_dir` when it is non-empty.
TrainResult train(DvGan& gan, const std::vector<gei::Gei>& corpus, const TrainConfig& config,
                  const std::filesystem::path& out_dir = {}, const IterationCallback& on_iteration = {});

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history);
std::vector<LossRecord> read_loss_csv(const std::filesystem::path& path);

}  // namespace dvgait::dvgan
