#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dvgait/gei/gei.hpp"

namespace dvgait::evalproto {

struct SplitSpec {
  std::vector<std::string> train_subjects;
  std::vector<std::string> test_subjects;
  std::vector<std::string> gallery_sequences;
  std::vector<std::string> probe_sequences;
};

/// Throws std::invalid_argument if train/test subjects or gallery/probe
/// sequences overlap, or if any list is empty.
void validate(const SplitSpec& spec);

/// First `train_count` of the sorted ids train, the rest test.
SplitSpec ordered_split(std::vector<std::string> subjects, std::size_t train_count,
                        std::vector<std::string> gallery_sequences, std::vector<std::string> probe_sequences);

/// Random partition into `folds` near-equal subject groups; split k tests on group k.
std::vector<SplitSpec> fold_splits(std::vector<std::string> subjects, int folds, std::uint64_t seed,
                                   std::vector<std::string> gallery_sequences,
                                   std::vector<std::string> probe_sequences);

struct Split {
  std::vector<gei::Gei> train;
  std::vector<gei::Gei> gallery;
  std::vector<gei::Gei> probe;
};

/// Partitions `geis`. Train takes every GEI of a train subject; gallery and
/// probe take original GEIs of test subjects in their sequences. Every
/// (subject, sequence, view) cell implied by the spec must be present, with
/// views taken from the original GEIs. Synthesized GEIs of a test subject
/// are rejected.
Split build_split(const std::vector<gei::Gei>& geis, const SplitSpec& spec);

}  // namespace dvgait::evalproto
