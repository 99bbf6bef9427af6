#include "dvgait/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dvgait/dvgan/synthesis.hpp"
#include "dvgait/evalproto/split.hpp"
#include "dvgait/gei/cache.hpp"
#include "dvgait/imageio/png.hpp"
#include "dvgait/numgrad/checkpoint.hpp"

namespace dvgait::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<gei::Gei> of_subjects(const std::vector<gei::Gei>& geis, const std::vector<std::string>& subjects) {
  const std::set<std::string> keep(subjects.begin(), subjects.end());
  std::vector<gei::Gei> out;
  for (const auto& g : geis)
    if (keep.count(g.subject)) out.push_back(g);
  return out;
}

void reset_dir(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<gaitgen::SubjectSpec> load_subjects(const Layout& layout) {
  const fs::path path = layout.corpus() / gaitgen::kSubjectsName;
  require(path, "gen-data");
  std::ifstream in(path);
  std::ostringstream text;
  text << in.rdbuf();
  return gaitgen::subjects_from_json(text.str());
}

const gaitgen::SubjectSpec& find_subject(const std::vector<gaitgen::SubjectSpec>& specs, const std::string& id) {
  for (const auto& s : specs)
    if (s.subject_id == id) return s;
  throw std::runtime_error("subject " + id + " missing from subjects.json");
}

const gei::Gei* find_gei(const std::vector<gei::Gei>& geis, const std::string& subject, const std::string& sequence,
                         double view) {
  for (const auto& g : geis)
    if (g.subject == subject && g.sequence == sequence && std::abs(g.view_deg - view) < 1e-6) return &g;
  return nullptr;
}

std::unique_ptr<dvgan::GeneratorNet> load_generator(const RunConfig& config, const Layout& layout) {
  const fs::path path = layout.gan() / dvgan::kGeneratorFile;
  require(path, "train-gan");
  numgrad::Rng rng(0);
  auto g = std::make_unique<dvgan::GeneratorNet>(config.gan.generator, rng);
  numgrad::load_checkpoint(path, *g);
  g->eval();
  return g;
}

std::vector<float> decode_blend(dvgan::GeneratorNet& g, const gei::Gei& p, const gei::Gei& q, double alpha) {
  numgrad::NoGradGuard guard;
  const auto zp = dvgan::encode(g, p);
  const auto zq = dvgan::encode(g, q);
  return dvgan::image_pixels(g.decode(dvgan::interpolate_latent(zp.z, zq.z, alpha)), 0);
}

void put_tile(imageio::GrayImage& image, int row, int col, std::span<const float> pixels) {
  for (int y = 0; y < gei::kSize; ++y)
    for (int x = 0; x < gei::kSize; ++x) {
      const float v = std::clamp(pixels[y * gei::kSize + x], 0.0f, 1.0f);
      image.pixels[static_cast<std::size_t>((row * gei::kSize + y) * image.width + col * gei::kSize + x)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
}

}  // namespace

CorpusSummary gen_data(const RunConfig& config) {
  const Layout layout(config.output);
  const auto t0 = std::chrono::steady_clock::now();
  reset_dir(layout.corpus());
  fs::remove_all(layout.gei_cache());
  gaitgen::build_corpus(config.corpus, layout.corpus());
  const auto geis = gei::load_corpus_geis(layout.corpus(), layout.gei_cache());
  CorpusSummary summary;
  summary.cells = gaitgen::read_manifest(layout.corpus() / gaitgen::kManifestName).size();
  summary.geis = geis.size();
  record_step(config, "gen-data",
              {{"cells", summary.cells}, {"geis", summary.geis}, {"seconds", seconds_since(t0)}});
  return summary;
}

std::vector<gei::Gei> load_original_geis(const RunConfig& config) {
  const Layout layout(config.output);
  require(layout.corpus() / gaitgen::kManifestName, "gen-data");
  return gei::load_corpus_geis(layout.corpus(), layout.gei_cache());
}

evalproto::SplitSpec split_spec(const RunConfig& config, const std::vector<gei::Gei>& originals) {
  std::set<std::string> ids;
  for (const auto& g : originals) ids.insert(g.subject);
  if (static_cast<int>(ids.size()) <= config.eval.train_subjects)
    throw ConfigError("corpus has " + std::to_string(ids.size()) + " subjects, too few for " +
                      std::to_string(config.eval.train_subjects) + " train subjects plus a test set");
  return evalproto::ordered_split({ids.begin(), ids.end()}, static_cast<std::size_t>(config.eval.train_subjects),
                                  config.eval.gallery_sequences, config.eval.probe_sequences);
}

GanSummary train_gan(const RunConfig& config) {
  const Layout layout(config.output);
  const auto geis = load_original_geis(config);
  const auto spec = split_spec(config, geis);
  const auto train = of_subjects(geis, spec.train_subjects);
  const auto test = of_subjects(geis, spec.test_subjects);

  const auto t0 = std::chrono::steady_clock::now();
  reset_dir(layout.gan());
  dvgan::DvGan gan(config.gan.generator, config.gan.critic, config.seed);
  GanSummary summary;
  summary.training = dvgan::train(gan, train, config.gan, layout.gan());
  summary.seconds = seconds_since(t0);
  if (!summary.training.epoch_l1.empty()) {
    summary.first_epoch_l1 = summary.training.epoch_l1.front();
    summary.last_epoch_l1 = summary.training.epoch_l1.back();
  }

  auto& g = *gan.generator;
  g.eval();
  numgrad::NoGradGuard guard;
  double total = 0;
  constexpr std::size_t kChunk = 32;
  for (std::size_t i = 0; i < test.size(); i += kChunk) {
    std::vector<const gei::Gei*> chunk;
    for (std::size_t k = i; k < std::min(test.size(), i + kChunk); ++k) chunk.push_back(&test[k]);
    const auto out = g.decode(g.encode(dvgan::to_tensor(chunk)));
    for (std::size_t k = 0; k < chunk.size(); ++k) total += gei::mean_l1(dvgan::image_pixels(out, k), chunk[k]->pixels);
  }
  summary.heldout_l1 = test.empty() ? 0.0 : total / static_cast<double>(test.size());

  json s = {{"epoch_l1", summary.training.epoch_l1},
            {"first_epoch_l1", summary.first_epoch_l1},
            {"last_epoch_l1", summary.last_epoch_l1},
            {"heldout_l1", summary.heldout_l1},
            {"heldout_geis", test.size()},
            {"iterations", summary.training.history.size()}};
  write_text(layout.gan() / "summary.json", s.dump(2) + "\n");
  s["seconds"] = summary.seconds;
  record_step(config, "train-gan", s);
  return summary;
}

SynthSummary synth(const RunConfig& config) {
  const Layout layout(config.output);
  const fs::path checkpoint = layout.gan() / dvgan::kGeneratorFile;
  require(checkpoint, "train-gan");
  const auto geis = load_original_geis(config);
  const auto train = of_subjects(geis, split_spec(config, geis).train_subjects);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = dvgan::synthesize_dense_set(checkpoint, config.gan.generator, train, config.synth);
  reset_dir(layout.dense());
  dvgan::write_dense_set(layout.dense(), train, result);
  SynthSummary summary{train.size(), result.geis.size(), result.warnings.size()};
  record_step(config, "synth",
              {{"originals", summary.originals},
               {"synthesized", summary.synthesized},
               {"warnings", summary.warnings},
               {"seconds", seconds_since(t0)}});
  return summary;
}

TrainingSet parse_training_set(const std::string& text) {
  if (text == "og") return TrainingSet::og;
  if (text == "dv") return TrainingSet::dv;
  throw ConfigError("training set must be og or dv, got '" + text + "'");
}

std::string training_set_name(TrainingSet set) { return set == TrainingSet::og ? "og" : "dv"; }

CnnSummary train_cnn(const RunConfig& config, TrainingSet set) {
  const Layout layout(config.output);
  const auto geis = load_original_geis(config);
  const auto train = of_subjects(geis, split_spec(config, geis).train_subjects);
  std::vector<gei::Gei> synthesized;
  if (set == TrainingSet::dv) {
    require(layout.dense() / dvgan::kDenseManifest, "synth");
    for (auto& g : dvgan::load_dense_set(layout.dense()))
      if (g.origin == gei::Origin::synthesized) synthesized.push_back(std::move(g));
  }
  const std::string name = training_set_name(set);
  const fs::path dir = layout.cnn(name);
  const auto t0 = std::chrono::steady_clock::now();
  reset_dir(dir);
  featnet::FeatureModel model(config.cnn.net, static_cast<int>(featnet::label_map(train).size()), config.seed);
  CnnSummary summary;
  summary.training = featnet::train_features(model, train, synthesized, config.cnn, dir);
  summary.originals = train.size();
  summary.synthesized = synthesized.size();
  summary.seconds = seconds_since(t0);
  record_step(config, "train-cnn-" + name,
              {{"originals", summary.originals},
               {"synthesized", summary.synthesized},
               {"train_accuracy", summary.training.train_accuracy},
               {"seconds", summary.seconds}});
  return summary;
}

evalproto::RecognitionMatrix brute_force_rank1(const std::vector<evalproto::Embedding>& gallery,
                                               const std::vector<evalproto::Embedding>& probe,
                                               evalproto::Metric metric) {
  auto views = [](const std::vector<evalproto::Embedding>& set) {
    std::vector<double> v;
    for (const auto& e : set) v.push_back(e.view_deg);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  auto score = [metric](const evalproto::Embedding& a, const evalproto::Embedding& b) {
    if (metric == evalproto::Metric::cosine) return evalproto::distance(a.values, b.values, metric);
    double d = 0;
    for (std::size_t j = 0; j < a.values.size(); ++j) {
      const double t = static_cast<double>(a.values[j]) - b.values[j];
      d += t * t;
    }
    return d;
  };
  evalproto::RecognitionMatrix m{views(gallery), views(probe), {}};
  m.cells.assign(m.gallery_views.size() * m.probe_views.size(), 0.0);
  for (std::size_t r = 0; r < m.gallery_views.size(); ++r)
    for (std::size_t c = 0; c < m.probe_views.size(); ++c) {
      int hits = 0, n = 0;
      for (const auto& p : probe) {
        if (p.view_deg != m.probe_views[c]) continue;
        ++n;
        std::size_t best = gallery.size();
        double best_d = 0;
        for (std::size_t i = 0; i < gallery.size(); ++i) {
          if (gallery[i].view_deg != m.gallery_views[r]) continue;
          const double d = score(p, gallery[i]);
          if (best == gallery.size() || d < best_d) {
            best = i;
            best_d = d;
          }
        }
        hits += best < gallery.size() && gallery[best].subject == p.subject;
      }
      m.at(r, c) = n == 0 ? 0.0 : 100.0 * hits / n;
    }
  return m;
}

EvalSummary evaluate(const RunConfig& config, const std::vector<std::string>& runs, bool oracle) {
  if (runs.empty() || runs.size() > 2) throw ConfigError("evaluate takes one or two runs");
  const Layout layout(config.output);
  for (const auto& run : runs) {
    if (run.empty() || run.find_first_of("/\\.") != std::string::npos)
      throw ConfigError("run name '" + run + "' must be a plain directory name");
    require(layout.cnn(run) / featnet::kFeatureFile, "train-cnn --set " + run);
  }
  const auto geis = load_original_geis(config);
  const auto split = evalproto::build_split(geis, split_spec(config, geis));
  fs::create_directories(layout.eval());

  EvalSummary summary;
  json details = json::object();
  for (const auto& run : runs) {
    const fs::path checkpoint = layout.cnn(run) / featnet::kFeatureFile;
    const auto gallery = featnet::extract(checkpoint, config.cnn.net, split.gallery);
    const auto probe = featnet::extract(checkpoint, config.cnn.net, split.probe);
    featnet::write_embeddings_csv(layout.eval() / (run + "_gallery_embeddings.csv"), gallery);
    featnet::write_embeddings_csv(layout.eval() / (run + "_probe_embeddings.csv"), probe);

    RunEvaluation e;
    e.run = run;
    e.matrix = evalproto::rank1_matrix(gallery, probe, config.eval.metric);
    if (oracle) {
      const auto check = brute_force_rank1(gallery, probe, config.eval.metric);
      if (check.cells != e.matrix.cells || check.gallery_views != e.matrix.gallery_views ||
          check.probe_views != e.matrix.probe_views)
        throw AssertionFailure("run " + run + ": rank-1 matrix disagrees with the exhaustive search");
    }
    e.probe_means = evalproto::mean_excluding_identical(e.matrix);
    e.cross_view_mean = evalproto::row_mean(e.probe_means);
    e.diagonal_mean = evalproto::diagonal_mean(e.matrix);
    evalproto::write_matrix_csv(layout.eval() / (run + "_matrix.csv"), e.matrix);
    evalproto::write_summary_csv(layout.eval() / (run + "_summary.csv"), run, e.matrix);
    details[run] = {{"cross_view_mean", e.cross_view_mean}, {"diagonal_mean", e.diagonal_mean}};
    summary.runs.push_back(std::move(e));
  }
  if (runs.size() == 2) {
    summary.delta = evalproto::compare_runs(summary.runs[0].matrix, summary.runs[1].matrix);
    evalproto::write_delta_csv(layout.eval() / ("delta_" + runs[0] + "_vs_" + runs[1] + ".csv"), *summary.delta);
    details["delta"] = {{"runs", runs}, {"overall", summary.delta->overall}};
  }
  details["oracle"] = oracle;
  record_step(config, "evaluate", details);
  return summary;
}

MorphSummary morph_demo(const RunConfig& config) {
  const Layout layout(config.output);
  auto generator = load_generator(config, layout);
  const auto specs = load_subjects(layout);
  const auto geis = load_original_geis(config);
  const auto spec = split_spec(config, geis);
  const auto test = of_subjects(geis, spec.test_subjects);
  const std::string sequence = gaitgen::sequence_label(1);
  const auto& cc = config.corpus;
  fs::create_directories(layout.morph());

  MorphSummary summary;
  std::ostringstream mid_csv;
  mid_csv << "subject,sequence,lower,upper,morph_l1,gan_l1,gan_closer\n";
  for (const auto& subject : spec.test_subjects) {
    const auto& body = find_subject(specs, subject);
    for (const auto& [lower, upper] : dvgan::adjacent_pairs(cc.views)) {
      const gei::Gei* p = find_gei(test, subject, sequence, lower);
      const gei::Gei* q = find_gei(test, subject, sequence, upper);
      if (!p || !q) continue;
      const auto truth = gei::render_gei(body, 0.5 * (lower + upper), sequence, cc.cycles, cc.frames_per_cycle);
      MidpointCase m{subject, lower, upper, 0, 0};
      m.morph_l1 = gei::mean_l1(gei::pixel_morph(*p, *q, 0.5), truth);
      m.gan_l1 = gei::mean_l1(decode_blend(*generator, *p, *q, 0.5), truth.pixels);
      summary.gan_wins += m.gan_l1 < m.morph_l1;
      summary.morph_mean_l1 += m.morph_l1;
      summary.gan_mean_l1 += m.gan_l1;
      mid_csv << subject << ',' << sequence << ',' << gaitgen::view_label(lower) << ','
              << gaitgen::view_label(upper) << ',' << fmt("%.6f", m.morph_l1) << ',' << fmt("%.6f", m.gan_l1)
              << ',' << (m.gan_l1 < m.morph_l1 ? 1 : 0) << '\n';
      summary.midpoints.push_back(m);
    }
  }
  if (!summary.midpoints.empty()) {
    const double n = static_cast<double>(summary.midpoints.size());
    summary.win_rate = summary.gan_wins / n;
    summary.morph_mean_l1 /= n;
    summary.gan_mean_l1 /= n;
  }
  write_text(layout.morph() / "midpoints.csv", mid_csv.str());

  const auto& alphas = config.morph.alphas;
  const int n_alpha = static_cast<int>(alphas.size());
  std::vector<std::string> shown;
  for (const auto& subject : spec.test_subjects) {
    if (static_cast<int>(shown.size()) >= config.morph.subjects) break;
    if (find_gei(test, subject, sequence, config.morph.from_view) && find_gei(test, subject, sequence, config.morph.to_view))
      shown.push_back(subject);
  }
  imageio::GrayImage grid;
  grid.width = gei::kSize * (2 + 3 * n_alpha);
  grid.height = gei::kSize * static_cast<int>(std::max<std::size_t>(shown.size(), 1));
  grid.pixels.assign(static_cast<std::size_t>(grid.width) * grid.height, 0);
  std::ostringstream grid_csv;
  grid_csv << "subject,alpha,view,morph_l1,gan_l1\n";
  for (int row = 0; row < static_cast<int>(shown.size()); ++row) {
    const auto& subject = shown[row];
    const gei::Gei& p = *find_gei(test, subject, sequence, config.morph.from_view);
    const gei::Gei& q = *find_gei(test, subject, sequence, config.morph.to_view);
    put_tile(grid, row, 0, p.pixels);
    put_tile(grid, row, 1 + 2 * n_alpha, q.pixels);
    for (int k = 0; k < n_alpha; ++k) {
      const double view = dvgan::blended_view(p.view_deg, q.view_deg, alphas[k]);
      const auto morph = gei::pixel_morph(p, q, alphas[k]);
      const auto synth = decode_blend(*generator, p, q, alphas[k]);
      const auto truth = gei::render_gei(find_subject(specs, subject), view, sequence, cc.cycles, cc.frames_per_cycle);
      put_tile(grid, row, 1 + k, morph.pixels);
      put_tile(grid, row, 1 + n_alpha + k, synth);
      put_tile(grid, row, 2 + 2 * n_alpha + k, truth.pixels);
      grid_csv << subject << ',' << fmt("%.6f", alphas[k]) << ',' << gaitgen::view_label(view) << ','
               << fmt("%.6f", gei::mean_l1(morph, truth)) << ',' << fmt("%.6f", gei::mean_l1(synth, truth.pixels))
               << '\n';
    }
  }
  summary.grid_rows = shown.size();
  imageio::write_png(layout.morph() / "morph_grid.png", grid);
  write_text(layout.morph() / "morph_grid.csv", grid_csv.str());

  json s = {{"cases", summary.midpoints.size()},
            {"gan_wins", summary.gan_wins},
            {"win_rate", summary.win_rate},
            {"morph_mean_l1", summary.morph_mean_l1},
            {"gan_mean_l1", summary.gan_mean_l1},
            {"grid_rows", summary.grid_rows}};
  write_text(layout.morph() / "summary.json", s.dump(2) + "\n");
  record_step(config, "morph-demo", s);
  return summary;
}

}  // namespace dvgait::pipeline
