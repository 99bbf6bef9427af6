#include "dvgait/dvgan/synthesis.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dvgait/gaitgen/corpus.hpp"
#include "dvgait/gei/cache.hpp"
#include "dvgait/numgrad/checkpoint.hpp"

namespace dvgait::dvgan {

using namespace numgrad;

Tensor interpolate_latent(const Tensor& z_p, const Tensor& z_q, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  return lerp(z_p, z_q, alpha);
}

LatentCode interpolate_latent(const LatentCode& p, const LatentCode& q, double alpha) {
  return {interpolate_latent(p.z, q.z, alpha), blended_view(p.view_deg, q.view_deg, alpha), p.subject};
}

LatentCode encode(GeneratorNet& generator, const gei::Gei& x) {
  NoGradGuard guard;
  const bool was_training = generator.is_training();
  generator.eval();
  std::vector<const gei::Gei*> one{&x};
  LatentCode code{generator.encode(to_tensor(one)), x.view_deg, x.subject};
  generator.train(was_training);
  return code;
}

double blended_view(double p, double q, double alpha) {
  const double v = alpha * p + (1.0 - alpha) * q;
  return std::round(v * 1e6) / 1e6;
}

std::vector<double> alpha_set(int divisions) {
  if (divisions < 2) throw std::invalid_argument("alpha_set needs at least 2 divisions");
  std::vector<double> out;
  for (int k = 1; k < divisions; ++k) out.push_back(static_cast<double>(k) / divisions);
  return out;
}

SynthesisResult synthesize_dense_set(GeneratorNet& generator, const std::vector<gei::Gei>& originals,
                                     const SynthesisConfig& config) {
  for (double a : config.alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  NoGradGuard guard;
  const bool was_training = generator.is_training();
  generator.eval();

  std::map<std::pair<std::string, std::string>, std::vector<const gei::Gei*>> groups;
  for (const auto& g : originals) groups[{g.subject, g.sequence}].push_back(&g);
  auto find = [](const std::vector<const gei::Gei*>& group, double view) -> const gei::Gei* {
    for (const auto* g : group)
      if (std::abs(g->view_deg - view) < 1e-6) return g;
    return nullptr;
  };

  SynthesisResult result;
  const std::int64_t n_alpha = static_cast<std::int64_t>(config.alphas.size());
  for (const auto& [key, group] : groups) {
    for (const auto& [p, q] : config.pairs) {
      const gei::Gei* gp = find(group, p);
      const gei::Gei* gq = find(group, q);
      if (!gp || !gq) {
        std::ostringstream msg;
        msg << "skipped " << key.first << "/" << key.second << " pair (" << gaitgen::view_label(p) << ","
            << gaitgen::view_label(q) << "): missing " << gaitgen::view_label(gp ? q : p);
        result.warnings.push_back(msg.str());
        continue;
      }
      if (n_alpha == 0) continue;
      std::vector<const gei::Gei*> ends{gp, gq};
      const Tensor codes = generator.encode(to_tensor(ends));
      const Tensor zp = slice_batch(codes, 0, 1), zq = slice_batch(codes, 1, 2);
      std::vector<Tensor> blends;
      for (double a : config.alphas) blends.push_back(interpolate_latent(zp, zq, a));
      // Eval-mode decoding is per-sample, so batching the blends is exact.
      const Tensor images = generator.decode(concat_batch(blends));
      for (std::int64_t k = 0; k < n_alpha; ++k) {
        gei::Gei out;
        out.pixels = gei::quantize(image_pixels(images, k));
        out.subject = key.first;
        out.sequence = key.second;
        out.view_deg = blended_view(p, q, config.alphas[k]);
        out.origin = gei::Origin::synthesized;
        gei::validate(out);
        result.geis.push_back(std::move(out));
      }
    }
  }
  generator.train(was_training);
  return result;
}

SynthesisResult synthesize_dense_set(const std::filesystem::path& checkpoint, const GeneratorConfig& config,
                                     const std::vector<gei::Gei>& originals, const SynthesisConfig& synthesis) {
  Rng rng(0);
  GeneratorNet generator(config, rng);
  load_checkpoint(checkpoint, generator);
  return synthesize_dense_set(generator, originals, synthesis);
}

std::vector<DenseManifestRow> write_dense_set(const std::filesystem::path& dir,
                                              const std::vector<gei::Gei>& originals,
                                              const SynthesisResult& synthesized) {
  std::filesystem::create_directories(dir);
  std::vector<DenseManifestRow> rows;
  auto emit = [&](const gei::Gei& g) {
    const auto path = gei::cache_path(dir, g.subject, g.sequence, g.view_deg);
    std::filesystem::create_directories(path.parent_path());
    gei::write_gei_png(path, g);
    rows.push_back({g.subject, g.sequence, g.view_deg, g.origin,
                    std::filesystem::relative(path, dir).generic_string()});
  };
  for (const auto& g : originals) emit(g);
  for (const auto& g : synthesized.geis) emit(g);

  std::ofstream out(dir / kDenseManifest);
  if (!out) throw std::runtime_error("cannot write " + (dir / kDenseManifest).string());
  for (const auto& w : synthesized.warnings) out << "# " << w << "\n";
  for (const auto& r : rows)
    out << r.subject << '\t' << r.sequence << '\t' << gaitgen::view_label(r.view_deg) << '\t'
        << gei::origin_name(r.origin) << '\t' << r.path << '\n';
  return rows;
}

std::vector<DenseManifestRow> read_dense_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<DenseManifestRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    DenseManifestRow r;
    std::string view, origin;
    if (!std::getline(fields, r.subject, '\t') || !std::getline(fields, r.sequence, '\t') ||
        !std::getline(fields, view, '\t') || !std::getline(fields, origin, '\t') || !std::getline(fields, r.path))
      throw std::runtime_error("malformed dense manifest line: " + line);
    r.view_deg = std::stod(view);
    r.origin = gei::parse_origin(origin);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<gei::Gei> load_dense_set(const std::filesystem::path& dir) {
  std::vector<gei::Gei> out;
  for (const auto& r : read_dense_manifest(dir / kDenseManifest)) {
    gei::Gei g;
    g.pixels = gei::read_gei_pixels(dir / r.path);
    g.subject = r.subject;
    g.sequence = r.sequence;
    g.view_deg = r.view_deg;
    g.origin = r.origin;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace dvgait::dvgan
