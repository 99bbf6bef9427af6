#include "dvgait/gei/gei.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dvgait::gei {

namespace {

// Weights w[o][i] = overlap of output cell o (width 1/scale in source units)
// with source cell i, times scale, so that each output is an area average.
std::vector<std::vector<std::pair<int, double>>> area_weights(int source, int target, double scale) {
  std::vector<std::vector<std::pair<int, double>>> w(target);
  for (int o = 0; o < target; ++o) {
    const double lo = o / scale, hi = (o + 1) / scale;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(source - 1, static_cast<int>(std::ceil(hi)) - 1);
    for (int i = std::max(0, first); i <= last; ++i) {
      const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
      if (overlap > 0) w[o].emplace_back(i, overlap * scale);
    }
  }
  return w;
}

}  // namespace

std::string_view origin_name(Origin origin) { return origin == Origin::original ? "original" : "synthesized"; }

Origin parse_origin(std::string_view text) {
  if (text == "original") return Origin::original;
  if (text == "synthesized") return Origin::synthesized;
  throw std::invalid_argument("unknown GEI origin '" + std::string(text) + "'");
}

void validate(const Gei& g) {
  if (g.pixels.size() != static_cast<std::size_t>(kPixels)) throw std::invalid_argument("GEI must be 64x64");
  bool any = false;
  for (float v : g.pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("GEI pixel outside [0, 1]: " + std::to_string(v));
    any = any || v > 0.0f;
  }
  if (!any) throw std::invalid_argument("GEI " + g.subject + "/" + g.sequence + " is empty");
}

std::vector<float> normalize_silhouette(const gaitgen::BinaryFrame& frame) {
  int r0 = frame.height, r1 = -1, c0 = frame.width, c1 = -1;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!frame.at(x, y)) continue;
      r0 = std::min(r0, y);
      r1 = std::max(r1, y);
      c0 = std::min(c0, x);
      c1 = std::max(c1, x);
    }
  }
  if (r1 < 0) throw std::invalid_argument("normalize_silhouette: frame has no foreground");
  const int hb = r1 - r0 + 1, wb = c1 - c0 + 1;
  const double scale = static_cast<double>(kSize) / hb;
  const int ws = std::max(1, static_cast<int>(std::ceil(wb * scale - 1e-9)));
  const auto wy = area_weights(hb, kSize, scale);
  const auto wx = area_weights(wb, ws, scale);

  // Vertical pass then horizontal pass.
  std::vector<double> rows(static_cast<std::size_t>(kSize) * wb, 0.0);
  for (int o = 0; o < kSize; ++o) {
    for (auto [i, w] : wy[o]) {
      for (int x = 0; x < wb; ++x) rows[o * wb + x] += w * frame.at(c0 + x, r0 + i);
    }
  }
  std::vector<double> scaled(static_cast<std::size_t>(kSize) * ws, 0.0);
  for (int y = 0; y < kSize; ++y) {
    for (int o = 0; o < ws; ++o) {
      double acc = 0;
      for (auto [i, w] : wx[o]) acc += w * rows[y * wb + i];
      scaled[y * ws + o] = std::clamp(acc, 0.0, 1.0);
    }
  }

  double mass = 0, moment = 0;
  for (int y = 0; y < kSize / 2; ++y) {
    for (int x = 0; x < ws; ++x) {
      mass += scaled[y * ws + x];
      moment += scaled[y * ws + x] * (x + 0.5);
    }
  }
  const double centroid = mass > 0 ? moment / mass : ws / 2.0;
  const int offset = static_cast<int>(std::floor(kSize / 2.0 - centroid + 0.5));

  std::vector<float> out(kPixels, 0.0f);
  for (int y = 0; y < kSize; ++y) {
    for (int x = 0; x < ws; ++x) {
      const int tx = x + offset;
      if (tx >= 0 && tx < kSize) out[y * kSize + tx] = static_cast<float>(scaled[y * ws + x]);
    }
  }
  return out;
}

Gei compute_gei(const gaitgen::SilhouetteSequence& sequence) {
  if (sequence.frames.empty()) throw std::invalid_argument("compute_gei: empty sequence");
  std::vector<double> acc(kPixels, 0.0);
  for (const auto& frame : sequence.frames) {
    const auto n = normalize_silhouette(frame);
    for (int i = 0; i < kPixels; ++i) acc[i] += n[i];
  }
  Gei g;
  const double inv = 1.0 / static_cast<double>(sequence.frames.size());
  for (int i = 0; i < kPixels; ++i) g.pixels[i] = static_cast<float>(acc[i] * inv);
  g.subject = sequence.subject_id;
  g.sequence = sequence.sequence_id;
  g.view_deg = sequence.view_deg;
  g.origin = Origin::original;
  return g;
}

Gei pixel_morph(const Gei& p, const Gei& q, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("pixel_morph: alpha outside [0, 1]");
  Gei out;
  for (int i = 0; i < kPixels; ++i) {
    if (alpha == 1.0) {
      out.pixels[i] = p.pixels[i];
    } else if (alpha == 0.0) {
      out.pixels[i] = q.pixels[i];
    } else {
      out.pixels[i] = static_cast<float>(alpha * p.pixels[i] + (1.0 - alpha) * q.pixels[i]);
    }
  }
  out.subject = p.subject;
  out.sequence = p.sequence;
  out.view_deg = alpha * p.view_deg + (1.0 - alpha) * q.view_deg;
  out.origin = Origin::synthesized;
  return out;
}

double mean_l1(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) throw std::invalid_argument("mean_l1: size mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(static_cast<double>(a[i]) - b[i]);
  return acc / static_cast<double>(a.size());
}

std::vector<float> stack_pixels(std::span<const Gei* const> geis) {
  std::vector<float> out;
  out.reserve(geis.size() * kPixels);
  for (const Gei* g : geis) {
    if (g->pixels.size() != static_cast<std::size_t>(kPixels)) throw std::invalid_argument("stack_pixels: GEI must be 64x64");
    out.insert(out.end(), g->pixels.begin(), g->pixels.end());
  }
  return out;
}

Gei render_gei(const gaitgen::SubjectSpec& spec, double view_deg, const std::string& sequence_id, int cycles,
               int frames_per_cycle, gaitgen::Canvas canvas) {
  return compute_gei(gaitgen::generate_sequence(spec, view_deg, sequence_id, cycles, frames_per_cycle, canvas));
}

}  // namespace dvgait::gei
