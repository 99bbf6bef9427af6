#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "dvgait/evalproto/paper_tables.hpp"
#include "dvgait/evalproto/recognition.hpp"
#include "dvgait/evalproto/split.hpp"
#include "dvgait/numgrad/random.hpp"

using namespace dvgait;
using namespace dvgait::evalproto;
namespace fs = std::filesystem;

namespace {

std::string id(int i) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%03d", i);
  return buf;
}

Embedding emb(std::vector<float> v, std::string subject, double view, std::string seq = "nm-01") {
  Embedding e;
  e.values = std::move(v);
  e.subject = std::move(subject);
  e.sequence = std::move(seq);
  e.view_deg = view;
  return e;
}

// Exhaustive reading of the rank-1 rule, written independently of rank1_matrix.
RecognitionMatrix brute_force(const std::vector<Embedding>& gallery, const std::vector<Embedding>& probe) {
  std::vector<double> gv, pv;
  for (const auto& e : gallery) gv.push_back(e.view_deg);
  for (const auto& e : probe) pv.push_back(e.view_deg);
  std::sort(gv.begin(), gv.end());
  gv.erase(std::unique(gv.begin(), gv.end()), gv.end());
  std::sort(pv.begin(), pv.end());
  pv.erase(std::unique(pv.begin(), pv.end()), pv.end());
  RecognitionMatrix m{gv, pv, std::vector<double>(gv.size() * pv.size())};
  for (std::size_t r = 0; r < gv.size(); ++r)
    for (std::size_t c = 0; c < pv.size(); ++c) {
      int hits = 0, n = 0;
      for (const auto& p : probe) {
        if (p.view_deg != pv[c]) continue;
        ++n;
        std::size_t best = gallery.size();
        double best_d = 0;
        for (std::size_t i = 0; i < gallery.size(); ++i) {
          if (gallery[i].view_deg != gv[r]) continue;
          double d = 0;
          for (std::size_t j = 0; j < p.values.size(); ++j) {
            const double t = static_cast<double>(p.values[j]) - gallery[i].values[j];
            d += t * t;
          }
          if (best == gallery.size() || d < best_d) {
            best = i;
            best_d = d;
          }
        }
        hits += gallery[best].subject == p.subject;
      }
      m.at(r, c) = 100.0 * hits / n;
    }
  return m;
}

}  // namespace

TEST_CASE("published table replay") {
  const auto m = published_dv_matrix();
  const auto means = mean_excluding_identical(m);
  CHECK(means[0] == doctest::Approx(64.518).epsilon(1e-9));
  CHECK(means[5] == doctest::Approx(72.581).epsilon(1e-9));
  const auto report = replay_published(m);
  CHECK(report.passed);
  CHECK(report.max_abs_error <= 0.05);
  CHECK(row_mean(published_dv_probe_means()) == doctest::Approx(75.0636).epsilon(1e-5));
  CHECK(report.computed_mean == doctest::Approx(75.1).epsilon(0.05 / 75.1));

  auto perturbed = m;
  perturbed.at(3, 0) += 5.0;
  CHECK_FALSE(replay_published(perturbed).passed);

  const auto csv = replay_csv(report);
  CHECK(csv.find("published,64.5,76.2,81.3,80.8,77.1,72.6,74.4,78.9,80.6,75.6,63.7,75.1") != std::string::npos);
}

TEST_CASE("aggregate helpers") {
  RecognitionMatrix c{{0, 90, 180}, {0, 90, 180}, std::vector<double>(9, 42.0)};
  for (double v : mean_excluding_identical(c)) CHECK(v == 42.0);
  CHECK(row_mean({7.5}) == 7.5);
  CHECK(row_mean({3, 3, 3}) == 3);
  CHECK_THROWS(row_mean({}));
  RecognitionMatrix rect{{0, 90}, {0, 90, 180}, std::vector<double>(6, 1.0)};
  CHECK_THROWS_AS(mean_excluding_identical(rect), std::invalid_argument);
}

TEST_CASE("rank1_matrix hand cases") {
  std::vector<Embedding> g;
  for (double v : {0.0, 90.0}) {
    g.push_back(emb({1, 0}, "001", v));
    g.push_back(emb({0, 1}, "002", v));
  }
  const auto m = rank1_matrix(g, g);
  for (double cell : m.cells) CHECK(cell == 100.0);
  CHECK(diagonal_mean(m) == 100.0);

  // Two gallery items equidistant from the probe: the first listed wins.
  std::vector<Embedding> tie{emb({1, 0}, "001", 0), emb({-1, 0}, "002", 0)};
  std::vector<Embedding> probe{emb({0, 1}, "002", 0)};
  CHECK(rank1_matrix(tie, probe).at(0, 0) == 0.0);
  std::swap(tie[0], tie[1]);
  CHECK(rank1_matrix(tie, probe).at(0, 0) == 100.0);

  CHECK_THROWS(rank1_matrix({}, probe));
  CHECK(parse_metric("cosine") == Metric::cosine);
  CHECK_THROWS(parse_metric("manhattan"));
  CHECK(distance(std::vector<float>{1, 0}, std::vector<float>{2, 0}, Metric::cosine) == doctest::Approx(0.0));
}

TEST_CASE("rank1_matrix agrees with a brute-force oracle") {
  numgrad::Rng rng(17);
  for (int instance = 0; instance < 50; ++instance) {
    const int subjects = 2 + static_cast<int>(rng.below(6));
    const int views = 1 + static_cast<int>(rng.below(4));
    const int dim = 1 + static_cast<int>(rng.below(5));
    std::vector<Embedding> gallery, probe;
    for (int s = 0; s < subjects; ++s)
      for (int v = 0; v < views; ++v)
        for (int k = 0; k < 2; ++k) {
          std::vector<float> a(dim), b(dim);
          // Coarse values make exact ties common.
          for (auto& x : a) x = static_cast<float>(rng.below(3));
          for (auto& x : b) x = static_cast<float>(rng.below(3));
          gallery.push_back(emb(a, id(s), v * 18.0, "nm-0" + std::to_string(k + 1)));
          if (k == 0) probe.push_back(emb(b, id(s), v * 18.0, "nm-03"));
        }
    REQUIRE(gallery.size() + probe.size() <= 200);
    const auto fast = rank1_matrix(gallery, probe);
    const auto slow = brute_force(gallery, probe);
    CHECK(fast.gallery_views == slow.gallery_views);
    CHECK(fast.cells == slow.cells);

    auto shuffled = probe;
    rng.shuffle(shuffled);
    CHECK(rank1_matrix(gallery, shuffled).cells == fast.cells);
  }
}

TEST_CASE("compare_runs") {
  const auto og = published_dv_matrix();
  const auto same = compare_runs(og, og);
  for (double d : same.cells) CHECK(d == 0.0);
  CHECK(same.overall == 0.0);
  CHECK(same.og_not_worse.size() == og.cells.size());

  auto dv = og;
  for (auto& c : dv.cells) c += 5.0;
  const auto up = compare_runs(dv, og);
  CHECK(up.overall == doctest::Approx(5.0));
  for (double d : up.per_probe) CHECK(d == doctest::Approx(5.0));
  CHECK(up.og_not_worse.empty());

  auto relabeled = og;
  relabeled.probe_views[0] = 1;
  CHECK_THROWS(compare_runs(relabeled, og));

  const auto dir = fs::temp_directory_path() / "dvgait_test_eval";
  fs::create_directories(dir);
  write_matrix_csv(dir / "m.csv", og);
  const auto back = read_matrix_csv(dir / "m.csv");
  CHECK(back.gallery_views == og.gallery_views);
  CHECK(back.cells == og.cells);
  write_delta_csv(dir / "d.csv", up);
  write_summary_csv(dir / "s.csv", "dv", og);
  CHECK(fs::file_size(dir / "d.csv") > 0);
  fs::remove_all(dir);
}

TEST_CASE("build_split") {
  std::vector<gei::Gei> geis;
  for (int s = 1; s <= 124; ++s)
    for (int q = 1; q <= 6; ++q)
      for (int v = 0; v <= 180; v += 18) {
        gei::Gei g;
        g.pixels.clear();
        g.subject = id(s);
        g.sequence = "nm-0" + std::to_string(q);
        g.view_deg = v;
        geis.push_back(std::move(g));
      }
  std::vector<std::string> subjects;
  for (int s = 1; s <= 124; ++s) subjects.push_back(id(s));
  const auto spec = ordered_split(subjects, 62, {"nm-01", "nm-02", "nm-03", "nm-04"}, {"nm-05", "nm-06"});
  CHECK(spec.train_subjects.front() == "001");
  CHECK(spec.train_subjects.back() == "062");
  const auto split = build_split(geis, spec);
  CHECK(split.train.size() == 62u * 6 * 11);
  CHECK(split.gallery.size() == 62u * 4 * 11);
  CHECK(split.probe.size() == 62u * 2 * 11);
  CHECK(std::count_if(split.probe.begin(), split.probe.end(), [](const gei::Gei& g) { return g.view_deg == 90; }) ==
        62 * 2);

  auto overlap = spec;
  overlap.test_subjects.push_back("001");
  CHECK_THROWS_AS(build_split(geis, overlap), std::invalid_argument);
  auto seq_overlap = spec;
  seq_overlap.probe_sequences.push_back("nm-01");
  CHECK_THROWS_AS(validate(seq_overlap), std::invalid_argument);

  auto holed = geis;
  holed.erase(holed.begin() + 100);
  try {
    build_split(holed, spec);
    FAIL("missing cell accepted");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("002/nm-04/018") != std::string::npos);
  }

  auto leaked = geis;
  gei::Gei synth = leaked.back();
  synth.origin = gei::Origin::synthesized;
  synth.view_deg = 9;
  leaked.push_back(synth);
  CHECK_THROWS_AS(build_split(leaked, spec), std::invalid_argument);
  auto allowed = geis;
  gei::Gei train_synth = allowed.front();
  train_synth.origin = gei::Origin::synthesized;
  train_synth.view_deg = 9;
  allowed.push_back(train_synth);
  CHECK(build_split(allowed, spec).train.size() == 62u * 6 * 11 + 1);

  const auto folds = fold_splits(subjects, 5, 3, {"nm-01"}, {"nm-02"});
  REQUIRE(folds.size() == 5);
  std::vector<std::string> all_test;
  for (const auto& f : folds) {
    CHECK(f.train_subjects.size() + f.test_subjects.size() == 124);
    CHECK(f.test_subjects.size() >= 24);
    all_test.insert(all_test.end(), f.test_subjects.begin(), f.test_subjects.end());
  }
  std::sort(all_test.begin(), all_test.end());
  CHECK(all_test == subjects);
  CHECK(fold_splits(subjects, 5, 3, {"nm-01"}, {"nm-02"})[2].test_subjects == folds[2].test_subjects);
}
