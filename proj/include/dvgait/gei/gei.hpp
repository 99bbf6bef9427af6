#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dvgait/gaitgen/render.hpp"

namespace dvgait::gei {

inline constexpr int kSize = 64;
inline constexpr int kPixels = kSize * kSize;

enum class Origin { original, synthesized };

std::string_view origin_name(Origin origin);
Origin parse_origin(std::string_view text);

/// 64x64 gait energy image in [0, 1], row-major.
struct Gei {
  std::vector<float> pixels = std::vector<float>(kPixels, 0.0f);
  std::string subject;
  std::string sequence;
  double view_deg = 0.0;
  Origin origin = Origin::original;
};

/// Throws std::invalid_argument unless pixels are 64x64, within [0, 1], and
/// not all zero.
void validate(const Gei& gei);

/// Crops to the foreground box, area-resamples to height 64, shifts so the
/// centroid of the top half sits on column 32, then pads/crops to width 64.
std::vector<float> normalize_silhouette(const gaitgen::BinaryFrame& frame);

/// Pixelwise mean of the normalized frames.
Gei compute_gei(const gaitgen::SilhouetteSequence& sequence);

/// alpha * p + (1 - alpha) * q, labeled at the blended view.
Gei pixel_morph(const Gei& p, const Gei& q, double alpha);

double mean_l1(std::span<const float> a, std::span<const float> b);
inline double mean_l1(const Gei& a, const Gei& b) { return mean_l1(a.pixels, b.pixels); }

/// Concatenated pixels of `geis` (N x 64 x 64), ready for an NCHW tensor.
std::vector<float> stack_pixels(std::span<const Gei* const> geis);

/// Ground-truth GEI rendered directly at any real-valued view.
Gei render_gei(const gaitgen::SubjectSpec& spec, double view_deg, const std::string& sequence_id, int cycles,
               int frames_per_cycle, gaitgen::Canvas canvas = {});

}  // namespace dvgait::gei
