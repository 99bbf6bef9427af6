#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dvgait/dvgan/networks.hpp"

namespace dvgait::dvgan {

/// alpha * z_p + (1 - alpha) * z_q; endpoints are returned exactly.
Tensor interpolate_latent(const Tensor& z_p, const Tensor& z_q, double alpha);
/// As above, labeled at view alpha * p + (1 - alpha) * q.
LatentCode interpolate_latent(const LatentCode& p, const LatentCode& q, double alpha);

/// Eval-mode code of one GEI.
LatentCode encode(GeneratorNet& generator, const gei::Gei& x);

/// alpha * p + (1 - alpha) * q, snapped to 1e-6 so that integer views print as integers.
double blended_view(double p, double q, double alpha);

/// {1/n, 2/n, ..., (n-1)/n}
std::vector<double> alpha_set(int divisions);

struct SynthesisConfig {
  std::vector<std::pair<double, double>> pairs;
  std::vector<double> alphas;
};

struct SynthesisResult {
  /// Synthesized GEIs only, quantized like cached GEIs.
  std::vector<gei::Gei> geis;
  /// One line per skipped (subject, sequence, pair).
  std::vector<std::string> warnings;
};

/// Every (pair, alpha) blend for every (subject, sequence) in `originals`.
/// Pairs with a missing member are skipped with a warning.
SynthesisResult synthesize_dense_set(GeneratorNet& generator, const std::vector<gei::Gei>& originals,
                                     const SynthesisConfig& config);
/// Loads generator weights from `checkpoint` first.
SynthesisResult synthesize_dense_set(const std::filesystem::path& checkpoint, const GeneratorConfig& generator,
                                     const std::vector<gei::Gei>& originals, const SynthesisConfig& config);

struct DenseManifestRow {
  std::string subject;
  std::string sequence;
  double view_deg = 0.0;
  gei::Origin origin = gei::Origin::original;
  std::string path;
};

inline constexpr const char* kDenseManifest = "dense_manifest.tsv";

/// Writes every GEI as `<dir>/<subject>/<sequence>/<view>.png` plus the
/// manifest (originals first, then synthesized; warnings as '#' lines).
std::vector<DenseManifestRow> write_dense_set(const std::filesystem::path& dir,
                                              const std::vector<gei::Gei>& originals,
                                              const SynthesisResult& synthesized);
std::vector<DenseManifestRow> read_dense_manifest(const std::filesystem::path& path);
/// Reads back every GEI listed in a dense manifest.
std::vector<gei::Gei> load_dense_set(const std::filesystem::path& dir);

}  // namespace dvgait::dvgan
