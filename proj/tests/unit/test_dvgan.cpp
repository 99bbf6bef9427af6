#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "dvgait/dvgan/synthesis.hpp"
#include "dvgait/dvgan/training.hpp"
#include "dvgait/gaitgen/corpus.hpp"
#include "dvgait/gaitgen/subject.hpp"
#include "dvgait/gei/cache.hpp"
#include "dvgait/numgrad/checkpoint.hpp"

using namespace dvgait;
using namespace dvgait::dvgan;
namespace fs = std::filesystem;
using numgrad::DType;

namespace {

GeneratorConfig tiny_generator() {
  GeneratorConfig g;
  g.encoder = {4, 8, 8, 8, 8, 8};
  g.decoder = {8, 8, 8, 8, 4, 1};
  return g;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 4;
  c.generator = tiny_generator();
  c.critic = {4, 8, 0.2};
  return c;
}

std::vector<gei::Gei> small_corpus(int subjects, int sequences, std::vector<double> views = {}) {
  if (views.empty())
    for (int v = 0; v <= 180; v += 18) views.push_back(v);
  const auto specs = gaitgen::make_subjects(subjects, 3);
  std::vector<gei::Gei> out;
  for (const auto& s : specs)
    for (int q = 1; q <= sequences; ++q)
      for (double v : views) {
        auto g = gei::render_gei(s, v, gaitgen::sequence_label(q), 1, 8);
        g.pixels = gei::quantize(g.pixels);
        out.push_back(std::move(g));
      }
  return out;
}

bool bit_equal(const numgrad::Tensor& a, const numgrad::Tensor& b) {
  if (a.shape() != b.shape()) return false;
  const auto x = a.to(DType::f32), y = b.to(DType::f32);
  return std::equal(x.data<float>().begin(), x.data<float>().end(), y.data<float>().begin());
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dvgait_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("generator shapes and default latent") {
  numgrad::Rng rng(1);
  GeneratorNet full(GeneratorConfig{}, rng);
  CHECK(full.latent_shape() == numgrad::Shape{64, 32, 32});
  full.eval();
  const auto geis = small_corpus(1, 1, {90});
  const auto z = full.encode(to_tensor(geis));
  CHECK(z.shape() == numgrad::Shape{1, 64, 32, 32});

  GeneratorNet g(tiny_generator(), rng);
  CHECK_THROWS_AS(g.encode(numgrad::Tensor::zeros({1, 1, 32, 32})), numgrad::ShapeError);
  CHECK_THROWS_AS(g.decode(numgrad::Tensor::zeros({1, 5, 32, 32})), numgrad::ShapeError);
  GeneratorConfig bad = tiny_generator();
  bad.decoder.back() = 3;
  CHECK_THROWS(GeneratorNet(bad, rng));
}

TEST_CASE("decode(encode(x)) equals the single-pass forward") {
  numgrad::Rng rng(2);
  GeneratorNet g(tiny_generator(), rng);
  const auto x = to_tensor(small_corpus(1, 1, {0, 54, 90}));
  // A few train-mode passes move the running statistics away from their init.
  for (int i = 0; i < 3; ++i) g.forward(x);
  g.eval();
  numgrad::NoGradGuard guard;
  const auto split = g.decode(g.encode(x));
  const auto whole = g.forward(x);
  CHECK(bit_equal(split, whole));
  CHECK(bit_equal(g.encode(x), g.encode(x)));
  CHECK(split.shape() == numgrad::Shape{3, 1, 64, 64});
  for (double v : split.to_vector()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("interpolate_latent") {
  numgrad::Rng rng(3);
  std::vector<float> a(16), b(16);
  for (auto& v : a) v = static_cast<float>(rng.normal());
  for (auto& v : b) v = static_cast<float>(rng.normal());
  const auto zp = numgrad::Tensor::from_vector({1, 1, 4, 4}, a);
  const auto zq = numgrad::Tensor::from_vector({1, 1, 4, 4}, b);
  CHECK(bit_equal(interpolate_latent(zp, zq, 1.0), zp));
  CHECK(bit_equal(interpolate_latent(zp, zq, 0.0), zq));
  const auto two = numgrad::Tensor::full({1}, 2.0), four = numgrad::Tensor::full({1}, 4.0);
  CHECK(interpolate_latent(two, four, 0.5).item() == 3.0);
  CHECK_THROWS(interpolate_latent(zp, zq, 1.5));

  LatentCode p{zp, 0.0, "001"}, q{zq, 18.0, "001"};
  CHECK(interpolate_latent(p, q, 0.5).view_deg == 9.0);
  CHECK(interpolate_latent(p, q, 1.0 / 18).view_deg == 17.0);
  CHECK(interpolate_latent(p, q, 17.0 / 18).view_deg == 1.0);
}

TEST_CASE("generator and critic losses") {
  const auto cfg = tiny_config();
  auto x = numgrad::Tensor::full({2, 1, 64, 64}, 0.25);
  auto logits = numgrad::Tensor::zeros({2, 1});
  const auto loss = generator_loss(x, x, logits, logits, cfg);
  CHECK(loss.l1 == 0.0);
  CHECK(loss.total.item() == doctest::Approx((cfg.w_d + cfg.w_m) * std::log(2.0)).epsilon(1e-6));
  auto y = numgrad::Tensor::full({2, 1, 64, 64}, 0.5);
  const auto mixed = generator_loss(x, y, numgrad::Tensor::full({2, 1}, 0.7), numgrad::Tensor::full({2, 1}, -1.2), cfg);
  CHECK(mixed.total.item() ==
        doctest::Approx(cfg.lambda_l1 * mixed.l1 + cfg.w_d * mixed.adv_d + cfg.w_m * mixed.adv_m).epsilon(1e-6));

  CHECK(critic_loss(logits, logits).item() == doctest::Approx(2 * std::log(2.0)).epsilon(1e-6));
  const auto separated = critic_loss(numgrad::Tensor::full({2, 1}, 60.0), numgrad::Tensor::full({2, 1}, -60.0));
  CHECK(separated.item() < 1e-12);
}

TEST_CASE("critic output is a probability per pair") {
  numgrad::Rng rng(4);
  PairCritic d(CriticConfig{4, 8, 0.2}, rng, "disc");
  const auto x = to_tensor(small_corpus(1, 1, {0, 90}));
  const auto p = d.probability(x, x);
  CHECK(p.shape() == numgrad::Shape{2, 1});
  for (double v : p.to_vector()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK_THROWS_AS(d.logits(x, numgrad::Tensor::zeros({1, 1, 64, 64})), numgrad::ShapeError);
}

TEST_CASE("generator update leaves critic gradients empty") {
  const auto cfg = tiny_config();
  DvGan gan(cfg.generator, cfg.critic, 5);
  const auto x = to_tensor(small_corpus(1, 1, {0, 18, 36}));
  const auto lower = numgrad::slice_batch(x, 0, 1), centre = numgrad::slice_batch(x, 1, 2),
             upper = numgrad::slice_batch(x, 2, 3);
  const auto pair_lo = numgrad::concat_batch(std::vector{lower, lower});
  const auto pair_c = numgrad::concat_batch(std::vector{centre, centre});
  const auto pair_hi = numgrad::concat_batch(std::vector{upper, upper});
  const auto x_hat = gan.generator->forward(pair_c);
  const auto mid = synthesize_midpoint(*gan.generator, pair_lo, pair_hi);
  gan.discriminator->set_requires_grad(false);
  gan.monitor->set_requires_grad(false);
  const auto loss = generator_loss(pair_c, x_hat, gan.discriminator->logits(pair_c, x_hat),
                                   gan.monitor->logits(pair_c, mid), cfg);
  loss.total.backward();
  for (const auto& [name, t] : gan.discriminator->parameters()) CHECK_MESSAGE(!t.grad().defined(), name);
  for (const auto& [name, t] : gan.monitor->parameters()) CHECK_MESSAGE(!t.grad().defined(), name);
  std::size_t with_grad = 0;
  for (const auto& [name, t] : gan.generator->parameters()) with_grad += t.grad().defined();
  CHECK(with_grad == gan.generator->parameters().size());
}

TEST_CASE("monitor triples") {
  const std::vector<double> views{0, 18, 36, 54, 72, 90, 108, 126, 144, 162, 180};
  const auto centres = monitor_views(views, 18);
  CHECK(centres == std::vector<double>{18, 36, 54, 72, 90, 108, 126, 144, 162});

  const auto corpus = small_corpus(1, 1);
  const auto t = make_triple(corpus, "001", "nm-01", 90, 18);
  CHECK(t.lower->view_deg == 72);
  CHECK(t.centre->view_deg == 90);
  CHECK(t.upper->view_deg == 108);
  CHECK_THROWS_AS(make_triple(corpus, "001", "nm-01", 180, 18), std::invalid_argument);
  CHECK(find_triples(corpus, views, 18).size() == 9);

  auto cfg = tiny_config();
  CHECK_NOTHROW(validate(cfg));
  cfg.theta_prime = 10;
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  cfg = tiny_config();
  cfg.views = {0, 18};
  CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("monitor loss falls on a fixed batch against an untrained generator") {
  const auto cfg = tiny_config();
  DvGan gan(cfg.generator, cfg.critic, 6);
  const auto corpus = small_corpus(2, 1, {36, 54, 72});
  std::vector<const gei::Gei*> lo, mid, hi;
  for (const auto& g : corpus) (g.view_deg == 36 ? lo : g.view_deg == 54 ? mid : hi).push_back(&g);
  const auto centre = to_tensor(mid);
  const auto fake = synthesize_midpoint(*gan.generator, to_tensor(lo), to_tensor(hi)).detach();
  numgrad::Adam opt(gan.monitor->parameters(), cfg.critic_adam);
  std::vector<double> losses;
  for (int i = 0; i < 50; ++i) losses.push_back(monitor_step(*gan.monitor, opt, centre, fake));
  double first = 0, last = 0;
  for (int i = 0; i < 5; ++i) {
    first += losses[i];
    last += losses[45 + i];
  }
  CHECK(last < first);
}

TEST_CASE("training with zero epochs writes the initialization") {
  auto cfg = tiny_config();
  cfg.epochs = 0;
  const auto dir = temp_dir("gan0");
  DvGan gan(cfg.generator, cfg.critic, cfg.seed);
  const auto result = train(gan, small_corpus(2, 1), cfg, dir);
  CHECK(result.history.empty());
  DvGan fresh(cfg.generator, cfg.critic, cfg.seed);
  const auto stored = numgrad::load_tensors(dir / kGeneratorFile);
  const auto init = fresh.generator->state();
  REQUIRE(stored.size() == init.size());
  for (std::size_t i = 0; i < init.size(); ++i) {
    CHECK(stored[i].first == init[i].first);
    CHECK(bit_equal(stored[i].second, init[i].second));
  }
  CHECK(fs::exists(dir / kDiscriminatorFile));
  CHECK(fs::exists(dir / kMonitorFile));
  CHECK(read_loss_csv(dir / kLossFile).empty());
  fs::remove_all(dir);
}

TEST_CASE("training is deterministic and its CSV round-trips") {
  const auto cfg = tiny_config();
  const auto corpus = small_corpus(2, 1);
  DvGan a(cfg.generator, cfg.critic, cfg.seed), b(cfg.generator, cfg.critic, cfg.seed);
  const auto dir = temp_dir("gan1");
  const auto ra = train(a, corpus, cfg, dir);
  const auto rb = train(b, corpus, cfg);
  REQUIRE(ra.history.size() == corpus.size() / cfg.batch_size);
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    CHECK(ra.history[i].l1 == rb.history[i].l1);
    CHECK(ra.history[i].d_loss == rb.history[i].d_loss);
    CHECK(ra.history[i].m_loss == rb.history[i].m_loss);
  }
  const auto back = read_loss_csv(dir / kLossFile);
  REQUIRE(back.size() == ra.history.size());
  CHECK(back[3].l1 == doctest::Approx(ra.history[3].l1).epsilon(1e-8));
  CHECK(back[3].epoch == 1);
  CHECK(back[3].iter == 3);
  fs::remove_all(dir);
}

TEST_CASE("non-finite weights abort training with a diagnostic") {
  const auto cfg = tiny_config();
  DvGan gan(cfg.generator, cfg.critic, cfg.seed);
  auto params = gan.generator->parameters();
  auto& w = params.front().second;
  auto bad = w.to_vector();
  bad[0] = std::nan("");
  w.assign_(numgrad::Tensor::from_values(w.shape(), bad, w.dtype()));
  CHECK_THROWS_AS(train(gan, small_corpus(2, 1), cfg), TrainingError);
}

TEST_CASE("dense-view synthesis counts and labels") {
  const auto cfg = tiny_config();
  DvGan gan(cfg.generator, cfg.critic, 9);
  const auto originals = small_corpus(1, 1);
  SynthesisConfig synth{adjacent_pairs(cfg.views), alpha_set(18)};
  CHECK(synth.alphas.size() == 17);
  const auto result = synthesize_dense_set(*gan.generator, originals, synth);
  CHECK(result.geis.size() == 170);
  CHECK(result.warnings.empty());
  std::set<double> views;
  for (const auto& g : originals) views.insert(g.view_deg);
  for (const auto& g : result.geis) {
    CHECK(g.origin == gei::Origin::synthesized);
    CHECK(g.subject == "001");
    CHECK(g.view_deg == std::round(g.view_deg));
    CHECK_NOTHROW(gei::validate(g));
    views.insert(g.view_deg);
  }
  CHECK(views.size() == 181);
  CHECK(*views.begin() == 0);
  CHECK(*views.rbegin() == 180);

  const auto dir = temp_dir("dense");
  write_dense_set(dir, originals, result);
  const auto rows = read_dense_manifest(dir / kDenseManifest);
  CHECK(rows.size() == 181);
  const auto loaded = load_dense_set(dir);
  REQUIRE(loaded.size() == 181);
  CHECK(loaded[20].pixels == result.geis[9].pixels);
  CHECK(loaded[20].view_deg == result.geis[9].view_deg);
  fs::remove_all(dir);
}

TEST_CASE("synthesis over a 10-degree view set and with a missing view") {
  const auto cfg = tiny_config();
  DvGan gan(cfg.generator, cfg.critic, 10);
  const std::vector<double> views{55, 65, 75, 85};
  const auto originals = small_corpus(1, 1, views);
  const auto result = synthesize_dense_set(*gan.generator, originals, {adjacent_pairs(views), alpha_set(10)});
  std::set<double> all(views.begin(), views.end());
  for (const auto& g : result.geis) all.insert(g.view_deg);
  CHECK(all.size() == 31);
  CHECK(*all.begin() == 55);
  CHECK(*all.rbegin() == 85);

  std::vector<gei::Gei> holed;
  for (const auto& g : originals)
    if (g.view_deg != 65) holed.push_back(g);
  const auto partial = synthesize_dense_set(*gan.generator, holed, {adjacent_pairs(views), alpha_set(10)});
  CHECK(partial.geis.size() == 9);
  REQUIRE(partial.warnings.size() == 2);
  const auto dir = temp_dir("holed");
  write_dense_set(dir, holed, partial);
  std::ifstream in(dir / kDenseManifest);
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("# skipped", 0) == 0);
  CHECK(read_dense_manifest(dir / kDenseManifest).size() == 12);
  fs::remove_all(dir);
}
