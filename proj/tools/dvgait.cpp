#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dvgait/evalproto/paper_tables.hpp"
#include "dvgait/numgrad/parallel.hpp"
#include "dvgait/pipeline/pipeline.hpp"

namespace {

using namespace dvgait;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kAssertion = 1, kConfig = 2, kMissing = 3 };

struct Common {
  std::string config_path;
  std::string output;
  std::int64_t seed = -1;
};

void add_common(CLI::App& sub, Common& common) {
  sub.add_option("-c,--config", common.config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  sub.add_option("-o,--output", common.output, "Override the output directory");
  sub.add_option("--seed", common.seed, "Override the seed")->check(CLI::NonNegativeNumber);
}

pipeline::RunConfig resolve(const Common& common) {
  std::ifstream in(common.config_path);
  std::ostringstream text;
  text << in.rdbuf();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw pipeline::ConfigError(common.config_path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw pipeline::ConfigError(common.config_path + ": top level must be an object");
  if (!common.output.empty()) doc["output"] = common.output;
  if (common.seed >= 0) doc["seed"] = static_cast<std::uint64_t>(common.seed);
  try {
    return pipeline::parse_config(doc.dump());
  } catch (const pipeline::ConfigError& e) {
    throw pipeline::ConfigError(common.config_path + ": " + e.what());
  }
}

int replay(const std::string& matrix_csv, const std::string& out_csv) {
  const auto matrix = matrix_csv.empty() ? evalproto::published_dv_matrix() : evalproto::read_matrix_csv(matrix_csv);
  const auto report = evalproto::replay_published(matrix);
  const std::string csv = evalproto::replay_csv(report);
  std::cout << csv;
  std::printf("max abs error %.4f, mean %.2f vs %.1f\n", report.max_abs_error, report.computed_mean,
              report.published_mean);
  if (!out_csv.empty()) pipeline::write_text(out_csv, csv);
  if (!report.passed) {
    std::cerr << "replay disagrees with the published means beyond 0.05\n";
    return kAssertion;
  }
  return kOk;
}

void print_eval(const pipeline::EvalSummary& s) {
  for (const auto& r : s.runs)
    std::printf("%s: cross-view mean %.2f%%, same-view mean %.2f%%\n", r.run.c_str(), r.cross_view_mean,
                r.diagonal_mean);
  if (s.delta) std::printf("delta (first minus second): %+.2f points\n", s.delta->overall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense-view GEI synthesis and cross-view gait recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pipeline::kVersion);

  Common common;
  auto* gen = app.add_subcommand("gen-data", "Render the synthetic silhouette corpus and its GEIs");
  add_common(*gen, common);
  auto* gan = app.add_subcommand("train-gan", "Train the generator, discriminator and monitor");
  add_common(*gan, common);
  auto* syn = app.add_subcommand("synth", "Synthesize the dense-view training set");
  add_common(*syn, common);

  auto* cnn = app.add_subcommand("train-cnn", "Train the feature CNN on original (og) or dense-view (dv) GEIs");
  add_common(*cnn, common);
  std::string set_name;
  cnn->add_option("--set", set_name, "Training set")->required()->check(CLI::IsMember({"og", "dv"}));

  auto* ev = app.add_subcommand("evaluate", "Cross-view rank-1 matrices, summaries and a delta report");
  add_common(*ev, common);
  std::vector<std::string> runs;
  bool oracle = false;
  ev->add_option("--run", runs, "Trained CNN run (og or dv); give two to compare, first minus second")
      ->expected(1, 2);
  ev->add_flag("--oracle", oracle, "Recheck every matrix by exhaustive nearest-neighbour search");

  auto* morph = app.add_subcommand("morph-demo", "Pixel morphing versus latent blending on held-out subjects");
  add_common(*morph, common);

  auto* all = app.add_subcommand("run-all", "gen-data, train-gan, synth, train-cnn og/dv, evaluate, morph-demo");
  add_common(*all, common);

  auto* rp = app.add_subcommand("replay-paper", "Recompute the published per-view means from the published matrix");
  std::string matrix_csv, out_csv;
  rp->add_option("--matrix", matrix_csv, "Replay this matrix CSV instead of the embedded one")
      ->check(CLI::ExistingFile);
  rp->add_option("--out", out_csv, "Also write the replay CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  numgrad::set_num_threads(numgrad::threads_from_env());
  try {
    if (rp->parsed()) return replay(matrix_csv, out_csv);
    const auto config = resolve(common);
    if (gen->parsed() || all->parsed()) {
      const auto s = pipeline::gen_data(config);
      std::printf("corpus: %zu cells, %zu GEIs\n", s.cells, s.geis);
    }
    if (gan->parsed() || all->parsed()) {
      const auto s = pipeline::train_gan(config);
      std::printf("gan: epoch L1 %.4f -> %.4f, held-out L1 %.4f (%.0fs)\n", s.first_epoch_l1, s.last_epoch_l1,
                  s.heldout_l1, s.seconds);
    }
    if (syn->parsed() || all->parsed()) {
      const auto s = pipeline::synth(config);
      std::printf("synth: %zu originals + %zu synthesized, %zu warnings\n", s.originals, s.synthesized, s.warnings);
    }
    auto run_cnn = [&](pipeline::TrainingSet set) {
      const auto s = pipeline::train_cnn(config, set);
      std::printf("cnn %s: %zu originals + %zu synthesized, train accuracy %.3f (%.0fs)\n",
                  pipeline::training_set_name(set).c_str(), s.originals, s.synthesized, s.training.train_accuracy,
                  s.seconds);
    };
    if (cnn->parsed()) run_cnn(pipeline::parse_training_set(set_name));
    if (all->parsed()) {
      run_cnn(pipeline::TrainingSet::og);
      run_cnn(pipeline::TrainingSet::dv);
    }
    if (ev->parsed() || all->parsed()) {
      if (runs.empty()) runs = {"dv", "og"};
      print_eval(pipeline::evaluate(config, runs, oracle));
    }
    if (morph->parsed() || all->parsed()) {
      const auto s = pipeline::morph_demo(config);
      std::printf("morph: latent blend closer than pixel morph in %d/%zu midpoints (L1 %.4f vs %.4f)\n", s.gan_wins,
                  s.midpoints.size(), s.gan_mean_l1, s.morph_mean_l1);
    }
    std::printf("outputs in %s\n", config.output.string().c_str());
    return kOk;
  } catch (const pipeline::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const pipeline::MissingArtifact& e) {
    std::cerr << e.what() << '\n';
    return kMissing;
  } catch (const pipeline::AssertionFailure& e) {
    std::cerr << "check failed: " << e.what() << '\n';
    return kAssertion;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAssertion;
  }
}
