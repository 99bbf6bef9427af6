#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dvgait/imageio/png.hpp"
#include "dvgait/numgrad/random.hpp"
#include "dvgait/pipeline/pipeline.hpp"

using namespace dvgait;
using namespace dvgait::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dvgait_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string tiny_json(const fs::path& out) {
  nlohmann::json j = {
      {"seed", 5},
      {"output", out.string()},
      {"corpus", {{"subjects", 5}, {"sequences", 2}, {"frames_per_cycle", 4}}},
      {"gan",
       {{"epochs", 1},
        {"batch_size", 4},
        {"encoder", {4, 8, 8, 8, 8, 8}},
        {"decoder", {8, 8, 8, 8, 4, 1}},
        {"critic", {{"conv1", 4}, {"conv2", 4}}}}},
      {"synth", {{"divisions", 3}}},
      {"cnn", {{"epochs", 1}, {"batch_size", 8}, {"conv", {4, 4, 4, 4, 4, 4, 4, 4, 4, 4}}, {"embedding", 8}}},
      {"eval", {{"train_subjects", 3}, {"gallery_sequences", {"nm-01"}}, {"probe_sequences", {"nm-02"}}}},
      {"morph", {{"subjects", 1}}}};
  return j.dump();
}

std::string with(const std::string& base, const std::string& pointer, const nlohmann::json& value) {
  auto j = nlohmann::json::parse(base);
  j[nlohmann::json::json_pointer(pointer)] = value;
  return j.dump();
}

}  // namespace

TEST_CASE("config parsing resolves defaults and propagates the seed") {
  const auto c = parse_config(R"({"seed": 9, "output": "x"})");
  CHECK(c.corpus.seed == 9);
  CHECK(c.gan.seed == 9);
  CHECK(c.cnn.seed == 9);
  CHECK(c.gan.views == c.corpus.views);
  CHECK(c.synth.pairs.size() == 10);
  CHECK(c.synth.alphas.size() == 17);
  CHECK(c.cnn.gamma == doctest::Approx(0.008));
  CHECK(c.gan.lambda_l1 == 100);
  CHECK(c.gan.generator_adam.beta1 == 0.5);
}

TEST_CASE("effective config round-trips") {
  const auto c = parse_config(tiny_json("out"));
  const std::string once = to_json(c);
  CHECK(to_json(parse_config(once)) == once);
}

TEST_CASE("config errors") {
  const std::string base = tiny_json("out");
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/bogus", 1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/gan/critic/extra", 1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/corpus/views/10", 198)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/corpus/views/3", 50)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/gan/epochs", "two")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/gan/epochs", 1.5)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/gan/batch_size", 1)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/eval/train_subjects", 5)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/eval/probe_sequences", {"nm-07"})), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/eval/probe_sequences", {"nm-01"})), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/eval/metric", "manhattan")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/synth/alphas", {0.5})), ConfigError);
  CHECK_THROWS_AS(parse_config(with(with(base, "/synth", nlohmann::json::object()), "/synth/alphas", {1.0})),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/cnn/conv/3", 5)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/morph/to_view", 45)), ConfigError);
  CHECK_THROWS_AS(parse_config(with(base, "/seed", -1)), ConfigError);
}

TEST_CASE("exhaustive rank-1 matches the matrix on random embeddings") {
  numgrad::Rng rng(3);
  for (int instance = 0; instance < 20; ++instance) {
    std::vector<evalproto::Embedding> gallery, probe;
    for (int s = 0; s < 4; ++s)
      for (int v = 0; v < 3; ++v) {
        for (auto* set : {&gallery, &probe}) {
          evalproto::Embedding e;
          e.subject = std::to_string(s);
          e.view_deg = 18.0 * v;
          for (int k = 0; k < 3; ++k) e.values.push_back(static_cast<float>(rng.below(3)));
          set->push_back(e);
        }
      }
    for (auto metric : {evalproto::Metric::euclidean, evalproto::Metric::cosine}) {
      const auto a = evalproto::rank1_matrix(gallery, probe, metric);
      const auto b = brute_force_rank1(gallery, probe, metric);
      CHECK(a.cells == b.cells);
    }
  }
}

TEST_CASE("stages report missing prerequisites") {
  const auto dir = temp_dir("pipe_missing");
  const auto c = parse_config(tiny_json(dir));
  CHECK_THROWS_AS(load_original_geis(c), MissingArtifact);
  CHECK_THROWS_AS(train_gan(c), MissingArtifact);
  CHECK_THROWS_AS(synth(c), MissingArtifact);
  CHECK_THROWS_AS(evaluate(c, {"og"}, false), MissingArtifact);
  CHECK_THROWS_AS(morph_demo(c), MissingArtifact);
  try {
    synth(c);
  } catch (const MissingArtifact& e) {
    CHECK(e.path().filename() == "generator.dvgw");
  }
}

TEST_CASE("tiny end-to-end run") {
  const auto dir = temp_dir("pipe_run");
  const auto c = parse_config(tiny_json(dir));
  const auto corpus = gen_data(c);
  CHECK(corpus.cells == 5 * 2 * 11);
  const std::string manifest = slurp(dir / "corpus" / gaitgen::kManifestName);
  const std::string frame = slurp(dir / "corpus" / "005" / "nm-02" / "180" / "frame-0003.png");

  // Rerunning with the same seed reproduces the corpus byte for byte.
  gen_data(c);
  CHECK(slurp(dir / "corpus" / gaitgen::kManifestName) == manifest);
  CHECK(slurp(dir / "corpus" / "005" / "nm-02" / "180" / "frame-0003.png") == frame);

  const auto originals = load_original_geis(c);
  const auto spec = split_spec(c, originals);
  CHECK(spec.train_subjects == std::vector<std::string>{"001", "002", "003"});
  CHECK(spec.test_subjects == std::vector<std::string>{"004", "005"});

  const auto gan = train_gan(c);
  CHECK(gan.training.epoch_l1.size() == 1);
  CHECK(gan.heldout_l1 > 0);
  CHECK(fs::exists(dir / "gan" / dvgan::kLossFile));
  const std::string losses = slurp(dir / "gan" / dvgan::kLossFile);

  const auto s = synth(c);
  CHECK(s.originals == 3 * 2 * 11);
  CHECK(s.synthesized == 3 * 2 * 10 * 2);
  const auto dense = dvgan::read_dense_manifest(dir / "dense" / dvgan::kDenseManifest);
  CHECK(dense.size() == s.originals + s.synthesized);
  for (const auto& row : dense) CHECK(row.subject < "004");

  CHECK_THROWS_AS(evaluate(c, {"og"}, false), MissingArtifact);
  const auto og = train_cnn(c, TrainingSet::og);
  const auto dv = train_cnn(c, TrainingSet::dv);
  CHECK(og.synthesized == 0);
  CHECK(dv.synthesized == s.synthesized);

  const auto e = evaluate(c, {"dv", "og"}, true);
  REQUIRE(e.runs.size() == 2);
  REQUIRE(e.delta.has_value());
  CHECK(e.runs[0].matrix.gallery_views.size() == 11);
  const auto read_back = evalproto::read_matrix_csv(dir / "eval" / "dv_matrix.csv");
  CHECK(read_back.probe_views == e.runs[0].matrix.probe_views);
  CHECK(fs::exists(dir / "eval" / "delta_dv_vs_og.csv"));

  const auto m = morph_demo(c);
  CHECK(m.midpoints.size() == 2 * 10);
  CHECK(m.grid_rows == 1);
  const auto grid = imageio::read_png(dir / "morph" / "morph_grid.png");
  CHECK(grid.width == 64 * (2 + 3 * 4));
  CHECK(grid.height == 64);

  const auto run = nlohmann::json::parse(slurp(dir / kRunManifest));
  for (const char* step : {"gen-data", "train-gan", "synth", "train-cnn-og", "train-cnn-dv", "evaluate", "morph-demo"})
    CHECK(run["steps"].contains(step));
  CHECK(run["seed"] == 5);
  CHECK(parse_config(slurp(dir / kEffectiveConfig)).seed == 5);

  // Same seed, same losses.
  train_gan(c);
  CHECK(slurp(dir / "gan" / dvgan::kLossFile) == losses);

  // Nothing outside the output directory was written by the stages.
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    CHECK((name == "corpus" || name == "gei" || name == "gan" || name == "dense" || name == "cnn" || name == "eval" ||
           name == "morph" || name == kRunManifest || name == kEffectiveConfig));
  }
}
