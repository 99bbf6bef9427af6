#include "dvgait/gei/cache.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dvgait/imageio/png.hpp"

namespace dvgait::gei {

namespace fs = std::filesystem;

fs::path cache_path(const fs::path& root, const std::string& subject, const std::string& sequence, double view_deg) {
  return root / subject / sequence / (gaitgen::view_label(view_deg) + ".png");
}

std::vector<float> quantize(std::span<const float> pixels) {
  std::vector<float> out(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out[i] = static_cast<float>(std::lround(std::clamp(pixels[i], 0.0f, 1.0f) * 255.0) / 255.0);
  }
  return out;
}

void write_gei_png(const fs::path& path, const Gei& gei) {
  imageio::GrayImage img{kSize, kSize, std::vector<std::uint8_t>(kPixels)};
  for (int i = 0; i < kPixels; ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(gei.pixels[i], 0.0f, 1.0f) * 255.0));
  }
  imageio::write_png(path, img, 8);
}

std::vector<float> read_gei_pixels(const fs::path& path) {
  const auto img = imageio::read_png(path);
  if (img.width != kSize || img.height != kSize) {
    throw std::runtime_error(path.string() + ": GEI must be 64x64, got " + std::to_string(img.width) + "x" +
                             std::to_string(img.height));
  }
  std::vector<float> out(kPixels);
  for (int i = 0; i < kPixels; ++i) out[i] = static_cast<float>(img.pixels[i] / 255.0);
  return out;
}

std::vector<Gei> load_corpus_geis(const fs::path& corpus_root, const fs::path& cache_root) {
  const auto manifest = gaitgen::read_manifest(corpus_root / gaitgen::kManifestName);
  std::vector<Gei> out;
  out.reserve(manifest.size());
  for (const auto& entry : manifest) {
    const auto path = cache_path(cache_root, entry.subject, entry.sequence, entry.view_deg);
    Gei g;
    if (fs::exists(path)) {
      g.pixels = read_gei_pixels(path);
    } else {
      g = compute_gei(gaitgen::load_sequence(corpus_root, entry));
      write_gei_png(path, g);
      g.pixels = quantize(g.pixels);
    }
    g.subject = entry.subject;
    g.sequence = entry.sequence;
    g.view_deg = entry.view_deg;
    g.origin = Origin::original;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace dvgait::gei
