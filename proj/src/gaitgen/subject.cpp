#include "dvgait/gaitgen/subject.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <stdexcept>

#include "dvgait/numgrad/random.hpp"

namespace dvgait::gaitgen {

namespace {

std::array<double, 4> ratios(const SubjectSpec& s) {
  return {s.torso_width_ratio, s.head_radius_ratio, s.leg_length_ratio, s.arm_length_ratio};
}

void check_range(const char* field, double v, double lo, double hi, bool open_lo = false) {
  if (!std::isfinite(v) || (open_lo ? v <= lo : v < lo) || v > hi) {
    throw std::invalid_argument(std::string("SubjectSpec.") + field + " = " + std::to_string(v) +
                                " outside " + (open_lo ? "(" : "[") + std::to_string(lo) + ", " +
                                std::to_string(hi) + "]");
  }
}

}  // namespace

void validate(const SubjectSpec& s) {
  check_range("height_px", s.height_px, 8.0, 4096.0);
  check_range("torso_width_ratio", s.torso_width_ratio, 0.0, 1.0, true);
  check_range("head_radius_ratio", s.head_radius_ratio, 0.0, 1.0, true);
  check_range("leg_length_ratio", s.leg_length_ratio, 0.0, 1.0, true);
  check_range("arm_length_ratio", s.arm_length_ratio, 0.0, 1.0, true);
  check_range("stride_amplitude_deg", s.stride_amplitude_deg, 10.0, 45.0);
  check_range("arm_swing_deg", s.arm_swing_deg, 0.0, 60.0);
  check_range("cadence", s.cadence, 0.0, 3.0, true);
  check_range("gait_asymmetry", s.gait_asymmetry, 0.0, 0.5);
  if (s.leg_length_ratio + 2 * s.head_radius_ratio >= 0.95) {
    throw std::invalid_argument("SubjectSpec: legs and head leave no room for a torso");
  }
}

bool distinguishable(const SubjectSpec& a, const SubjectSpec& b, double min_relative_gap) {
  const auto ra = ratios(a), rb = ratios(b);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    if (std::abs(ra[i] - rb[i]) >= min_relative_gap * std::max(ra[i], rb[i])) return true;
  }
  return false;
}

std::vector<SubjectSpec> make_subjects(int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("make_subjects: negative count");
  numgrad::Rng rng(numgrad::Rng::mix(seed, 0x5u));
  std::vector<SubjectSpec> out;
  while (static_cast<int>(out.size()) < count) {
    SubjectSpec s;
    char id[16];
    std::snprintf(id, sizeof id, "%03d", static_cast<int>(out.size()) + 1);
    s.subject_id = id;
    s.height_px = rng.uniform(88.0, 104.0);
    s.torso_width_ratio = rng.uniform(0.19, 0.31);
    s.head_radius_ratio = rng.uniform(0.055, 0.078);
    s.leg_length_ratio = rng.uniform(0.44, 0.54);
    s.arm_length_ratio = rng.uniform(0.33, 0.45);
    s.stride_amplitude_deg = rng.uniform(16.0, 38.0);
    s.arm_swing_deg = rng.uniform(8.0, 36.0);
    s.cadence = rng.uniform(0.75, 1.25);
    s.gait_asymmetry = rng.uniform(0.08, 0.25);
    s.rng_seed = rng.next();
    bool ok = true;
    for (const auto& prev : out) ok = ok && distinguishable(s, prev);
    if (ok) out.push_back(std::move(s));
  }
  return out;
}

std::string subjects_to_json(const std::vector<SubjectSpec>& subjects) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : subjects) {
    arr.push_back({{"subject_id", s.subject_id},
                   {"height_px", s.height_px},
                   {"torso_width_ratio", s.torso_width_ratio},
                   {"head_radius_ratio", s.head_radius_ratio},
                   {"leg_length_ratio", s.leg_length_ratio},
                   {"arm_length_ratio", s.arm_length_ratio},
                   {"stride_amplitude_deg", s.stride_amplitude_deg},
                   {"arm_swing_deg", s.arm_swing_deg},
                   {"cadence", s.cadence},
                   {"gait_asymmetry", s.gait_asymmetry},
                   {"rng_seed", s.rng_seed}});
  }
  return arr.dump(2) + "\n";
}

std::vector<SubjectSpec> subjects_from_json(const std::string& text) {
  const auto arr = nlohmann::json::parse(text);
  std::vector<SubjectSpec> out;
  for (const auto& j : arr) {
    SubjectSpec s;
    s.subject_id = j.at("subject_id").get<std::string>();
    s.height_px = j.at("height_px").get<double>();
    s.torso_width_ratio = j.at("torso_width_ratio").get<double>();
    s.head_radius_ratio = j.at("head_radius_ratio").get<double>();
    s.leg_length_ratio = j.at("leg_length_ratio").get<double>();
    s.arm_length_ratio = j.at("arm_length_ratio").get<double>();
    s.stride_amplitude_deg = j.at("stride_amplitude_deg").get<double>();
    s.arm_swing_deg = j.at("arm_swing_deg").get<double>();
    s.cadence = j.at("cadence").get<double>();
    s.gait_asymmetry = j.at("gait_asymmetry").get<double>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dvgait::gaitgen
