#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvgait/gaitgen/subject.hpp"

namespace dvgait::gaitgen {

struct Canvas {
  int width = 128;
  int height = 128;
};

/// Binary raster, row-major, values in {0, 1}.
struct BinaryFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t foreground() const;
};

/// Per-frame perturbations applied on top of the subject's own gait.
struct RenderJitter {
  double stride_scale = 1.0;  // scales hip, knee and arm swing
  int shift_x = 0;            // pixels, +right
  int shift_y = 0;            // pixels, +down
};

/// Orthographic render of the articulated walker at azimuth `view_deg`
/// (0 frontal, 90 side, 180 rear) and gait phase `phase` (period 1).
BinaryFrame render_silhouette(const SubjectSpec& spec, double view_deg, double phase, Canvas canvas = {},
                              RenderJitter jitter = {});

struct SilhouetteSequence {
  std::vector<BinaryFrame> frames;
  double view_deg = 0.0;
  std::string subject_id;
  std::string sequence_id;
  int frames_per_cycle = 0;
};

/// Frames at uniform phases over `cycles` cycles. Phase offset, stride scale
/// and per-frame +-1 px shifts are drawn from (spec.rng_seed, sequence_id), so
/// they are identical for every view of the same sequence.
SilhouetteSequence generate_sequence(const SubjectSpec& spec, double view_deg, const std::string& sequence_id,
                                     int cycles, int frames_per_cycle, Canvas canvas = {});

}  // namespace dvgait::gaitgen
