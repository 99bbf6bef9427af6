#include "dvgait/evalproto/split.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "dvgait/gaitgen/corpus.hpp"
#include "dvgait/numgrad/random.hpp"

namespace dvgait::evalproto {

namespace {

bool contains(const std::vector<std::string>& items, const std::string& x) {
  return std::find(items.begin(), items.end(), x) != items.end();
}

void require_disjoint(const std::vector<std::string>& a, const std::vector<std::string>& b, const char* what) {
  for (const auto& x : a)
    if (contains(b, x)) throw std::invalid_argument(std::string(what) + " overlap: " + x);
}

}  // namespace

void validate(const SplitSpec& spec) {
  if (spec.train_subjects.empty() || spec.test_subjects.empty())
    throw std::invalid_argument("split needs train and test subjects");
  if (spec.gallery_sequences.empty() || spec.probe_sequences.empty())
    throw std::invalid_argument("split needs gallery and probe sequences");
  require_disjoint(spec.train_subjects, spec.test_subjects, "train/test subjects");
  require_disjoint(spec.gallery_sequences, spec.probe_sequences, "gallery/probe sequences");
}

SplitSpec ordered_split(std::vector<std::string> subjects, std::size_t train_count,
                        std::vector<std::string> gallery_sequences, std::vector<std::string> probe_sequences) {
  std::sort(subjects.begin(), subjects.end());
  if (train_count == 0 || train_count >= subjects.size())
    throw std::invalid_argument("train count must leave at least one subject on each side");
  SplitSpec spec;
  spec.train_subjects.assign(subjects.begin(), subjects.begin() + train_count);
  spec.test_subjects.assign(subjects.begin() + train_count, subjects.end());
  spec.gallery_sequences = std::move(gallery_sequences);
  spec.probe_sequences = std::move(probe_sequences);
  validate(spec);
  return spec;
}

std::vector<SplitSpec> fold_splits(std::vector<std::string> subjects, int folds, std::uint64_t seed,
                                   std::vector<std::string> gallery_sequences,
                                   std::vector<std::string> probe_sequences) {
  if (folds < 2 || static_cast<std::size_t>(folds) > subjects.size())
    throw std::invalid_argument("fold count must be in [2, subject count]");
  std::sort(subjects.begin(), subjects.end());
  numgrad::Rng rng(seed);
  rng.shuffle(subjects);
  std::vector<std::vector<std::string>> groups(folds);
  for (std::size_t i = 0; i < subjects.size(); ++i) groups[i % folds].push_back(subjects[i]);
  std::vector<SplitSpec> out;
  for (int k = 0; k < folds; ++k) {
    SplitSpec spec;
    for (int j = 0; j < folds; ++j) {
      auto& dst = j == k ? spec.test_subjects : spec.train_subjects;
      dst.insert(dst.end(), groups[j].begin(), groups[j].end());
    }
    std::sort(spec.train_subjects.begin(), spec.train_subjects.end());
    std::sort(spec.test_subjects.begin(), spec.test_subjects.end());
    spec.gallery_sequences = gallery_sequences;
    spec.probe_sequences = probe_sequences;
    validate(spec);
    out.push_back(std::move(spec));
  }
  return out;
}

Split build_split(const std::vector<gei::Gei>& geis, const SplitSpec& spec) {
  validate(spec);
  std::set<double> views;
  std::set<std::tuple<std::string, std::string, double>> cells;
  for (const auto& g : geis) {
    if (g.origin != gei::Origin::original) continue;
    views.insert(g.view_deg);
    cells.emplace(g.subject, g.sequence, g.view_deg);
  }
  std::vector<std::string> sequences = spec.gallery_sequences;
  sequences.insert(sequences.end(), spec.probe_sequences.begin(), spec.probe_sequences.end());
  std::vector<std::string> missing;
  for (const auto* group : {&spec.train_subjects, &spec.test_subjects})
    for (const auto& s : *group)
      for (const auto& q : sequences)
        for (double v : views)
          if (!cells.count({s, q, v})) missing.push_back(s + "/" + q + "/" + gaitgen::view_label(v));
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << missing.size() << " missing cell(s):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg << ' ' << missing[i];
    if (missing.size() > 20) msg << " ...";
    throw std::invalid_argument(msg.str());
  }

  Split split;
  for (const auto& g : geis) {
    if (contains(spec.train_subjects, g.subject)) {
      split.train.push_back(g);
    } else if (contains(spec.test_subjects, g.subject)) {
      if (g.origin != gei::Origin::original)
        throw std::invalid_argument("synthesized GEI for test subject " + g.subject);
      if (contains(spec.gallery_sequences, g.sequence)) split.gallery.push_back(g);
      else if (contains(spec.probe_sequences, g.sequence)) split.probe.push_back(g);
    }
  }
  return split;
}

}  // namespace dvgait::evalproto
