#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dvgait::gaitgen {

/// Body and gait parameters of one synthetic walker. Lengths are fractions of
/// the standing height; angles in degrees.
struct SubjectSpec {
  std::string subject_id;
  double height_px = 96.0;
  double torso_width_ratio = 0.25;
  double head_radius_ratio = 0.065;
  double leg_length_ratio = 0.49;
  double arm_length_ratio = 0.39;
  double stride_amplitude_deg = 28.0;  // max hip swing
  double arm_swing_deg = 22.0;
  /// Relative cadence; scales knee flexion and forward lean.
  double cadence = 1.0;
  /// Left hip swings (1 + a) * amplitude, right hip (1 - a) * amplitude.
  /// Breaks the left/right mirror ambiguity of an orthographic side view.
  double gait_asymmetry = 0.15;
  std::uint64_t rng_seed = 0;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const SubjectSpec& spec);

/// True when at least one body ratio differs by >= min_relative_gap.
bool distinguishable(const SubjectSpec& a, const SubjectSpec& b, double min_relative_gap = 0.02);

/// Draws `count` subjects with ids "001", "002", ...; candidates too close to
/// an accepted subject are redrawn. Deterministic in `seed`.
std::vector<SubjectSpec> make_subjects(int count, std::uint64_t seed);

std::string subjects_to_json(const std::vector<SubjectSpec>& subjects);
std::vector<SubjectSpec> subjects_from_json(const std::string& text);

}  // namespace dvgait::gaitgen
