#include "dvgait/gaitgen/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "dvgait/numgrad/random.hpp"

namespace dvgait::gaitgen {

namespace {

constexpr double kPi = 3.14159265358979323846;

double rad(double deg) { return deg * kPi / 180.0; }

// Body frame: x forward (walking direction), y up, z to the walker's left.
struct Vec3 {
  double x, y, z;
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }

// Point at `length` from `from`, swung `angle` rad forward from straight down.
Vec3 limb(Vec3 from, double angle, double length) {
  return {from.x + length * std::sin(angle), from.y - length * std::cos(angle), from.z};
}

struct Capsule {
  Vec3 a, b;
  double radius;
};

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Capsule> pose(const SubjectSpec& s, double phase, double stride_scale) {
  const double H = s.height_px;
  const double leg = s.leg_length_ratio * H;
  const double head_r = s.head_radius_ratio * H;
  const double neck = 0.03 * H;
  const double torso_len = H - leg - 2 * head_r - neck;
  const double width = s.torso_width_ratio * H;
  const double depth = 0.6 * width;
  const double foot_r = 0.022 * H;
  const double thigh = 0.52 * leg;
  const double shin = 0.48 * leg - foot_r;
  const double arm = s.arm_length_ratio * H;

  const double w = 2 * kPi * phase;
  const double amp = rad(s.stride_amplitude_deg) * stride_scale;
  const double knee_amp = rad(35.0 * s.cadence) * stride_scale;
  const double swing = rad(s.arm_swing_deg) * stride_scale;
  const double lean = rad(4.0 * s.cadence);

  std::vector<Capsule> parts;
  const Vec3 pelvis{0.0, leg, 0.0};
  const std::array<double, 2> side{+1.0, -1.0};  // left, right
  const std::array<double, 2> hip_angle{amp * (1 + s.gait_asymmetry) * std::sin(w),
                                        -amp * (1 - s.gait_asymmetry) * std::sin(w)};
  const std::array<double, 2> knee{knee_amp * std::max(0.0, std::sin(w)),
                                   knee_amp * std::max(0.0, std::sin(w + kPi))};
  for (int i = 0; i < 2; ++i) {
    const Vec3 hip = pelvis + Vec3{0, 0, side[i] * 0.3 * width};
    const Vec3 knee_pt = limb(hip, hip_angle[i], thigh);
    const Vec3 ankle = limb(knee_pt, hip_angle[i] - knee[i], shin);
    parts.push_back({hip, knee_pt, 0.05 * H});
    parts.push_back({knee_pt, ankle, 0.038 * H});
    parts.push_back({ankle + Vec3{-0.02 * H, 0, 0}, ankle + Vec3{0.11 * H, 0, 0}, foot_r});
  }

  // Torso: two lateral capsules so frontal width and side depth differ.
  const double top = torso_len - depth / 2;
  const Vec3 tilt{top * std::sin(lean), top * std::cos(lean), 0};
  const double half = std::max(0.0, width / 2 - depth / 2);
  for (double z : {half, -half}) {
    const Vec3 base = pelvis + Vec3{0, depth * 0.25, z};
    parts.push_back({base, base + tilt, depth / 2});
  }

  const Vec3 shoulder_mid = pelvis + Vec3{torso_len * std::sin(lean), torso_len * std::cos(lean), 0};
  const std::array<double, 2> arm_angle{-swing * std::sin(w), swing * std::sin(w)};
  for (int i = 0; i < 2; ++i) {
    const Vec3 shoulder = shoulder_mid + Vec3{0, -0.03 * H, side[i] * (width / 2)};
    const Vec3 elbow = limb(shoulder, arm_angle[i], 0.48 * arm);
    const Vec3 wrist = limb(elbow, arm_angle[i] + rad(15.0), 0.52 * arm);
    parts.push_back({shoulder, elbow, 0.032 * H});
    parts.push_back({elbow, wrist, 0.027 * H});
  }

  const Vec3 head = shoulder_mid + Vec3{0.01 * H, neck + head_r, 0};
  parts.push_back({shoulder_mid, head, 0.035 * H});  // neck
  parts.push_back({head, head, head_r});

  // Ground contact: the lowest point of any part touches y = 0.
  double lowest = 1e300;
  for (const auto& p : parts) lowest = std::min({lowest, p.a.y - p.radius, p.b.y - p.radius});
  for (auto& p : parts) {
    p.a.y -= lowest;
    p.b.y -= lowest;
  }
  return parts;
}

}  // namespace

std::int64_t BinaryFrame::foreground() const {
  return std::count_if(pixels.begin(), pixels.end(), [](std::uint8_t v) { return v != 0; });
}

BinaryFrame render_silhouette(const SubjectSpec& spec, double view_deg, double phase, Canvas canvas,
                              RenderJitter jitter) {
  if (canvas.width <= 0 || canvas.height <= 0) throw std::invalid_argument("render_silhouette: empty canvas");
  if (!(view_deg >= 0.0 && view_deg <= 180.0)) {
    throw std::invalid_argument("render_silhouette: view " + std::to_string(view_deg) + " outside [0, 180]");
  }
  validate(spec);
  phase -= std::floor(phase);
  const auto parts = pose(spec, phase, jitter.stride_scale);
  const double su = std::sin(rad(view_deg)), cu = std::cos(rad(view_deg));
  auto project_u = [&](const Vec3& p) { return p.x * su - p.z * cu; };

  BinaryFrame frame{canvas.width, canvas.height, std::vector<std::uint8_t>(canvas.width * canvas.height, 0)};
  const double ground_row = canvas.height - 0.06 * canvas.height;
  const double centre_col = canvas.width / 2.0;
  for (const auto& part : parts) {
    const double ua = project_u(part.a), ub = project_u(part.b);
    const double va = part.a.y, vb = part.b.y;
    const double r = part.radius;
    // Pixel centre (col + 0.5, row + 0.5) maps to u = col + 0.5 - centre - shift_x,
    // y = ground - (row + 0.5) + shift_y.
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(ua, ub) - r + centre_col + jitter.shift_x)));
    const int c1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max(ua, ub) + r + centre_col + jitter.shift_x)));
    const int r0 = std::max(0, static_cast<int>(std::floor(ground_row - std::max(va, vb) - r + jitter.shift_y)));
    const int r1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(ground_row - std::min(va, vb) + r + jitter.shift_y)));
    const double du = ub - ua, dv = vb - va;
    const double len2 = du * du + dv * dv;
    for (int row = r0; row <= r1; ++row) {
      const double y = ground_row - (row + 0.5) + jitter.shift_y;
      for (int col = c0; col <= c1; ++col) {
        const double u = col + 0.5 - centre_col - jitter.shift_x;
        double t = len2 > 0 ? ((u - ua) * du + (y - va) * dv) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double eu = u - (ua + t * du), ev = y - (va + t * dv);
        if (eu * eu + ev * ev <= r * r) frame.pixels[static_cast<std::size_t>(row) * canvas.width + col] = 1;
      }
    }
  }
  if (frame.foreground() == 0) throw std::runtime_error("render_silhouette: walker fell outside the canvas");
  return frame;
}

SilhouetteSequence generate_sequence(const SubjectSpec& spec, double view_deg, const std::string& sequence_id,
                                     int cycles, int frames_per_cycle, Canvas canvas) {
  if (cycles < 1 || frames_per_cycle < 1) throw std::invalid_argument("generate_sequence: need >= 1 cycle and frame");
  numgrad::Rng rng(numgrad::Rng::mix(spec.rng_seed, fnv1a(sequence_id)));
  const double phase_offset = rng.uniform();
  const double stride_scale = 1.0 + rng.uniform(-0.04, 0.04);
  SilhouetteSequence seq;
  seq.view_deg = view_deg;
  seq.subject_id = spec.subject_id;
  seq.sequence_id = sequence_id;
  seq.frames_per_cycle = frames_per_cycle;
  const int total = cycles * frames_per_cycle;
  for (int f = 0; f < total; ++f) {
    RenderJitter jitter;
    jitter.stride_scale = stride_scale;
    jitter.shift_x = static_cast<int>(rng.below(3)) - 1;
    jitter.shift_y = static_cast<int>(rng.below(3)) - 1;
    const double phase = phase_offset + static_cast<double>(f) / frames_per_cycle;
    seq.frames.push_back(render_silhouette(spec, view_deg, phase, canvas, jitter));
  }
  return seq;
}

}  // namespace dvgait::gaitgen
