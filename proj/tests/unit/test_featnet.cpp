#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dvgait/featnet/training.hpp"
#include "dvgait/gaitgen/corpus.hpp"
#include "dvgait/gaitgen/subject.hpp"
#include "dvgait/gei/cache.hpp"
#include "dvgait/numgrad/gradcheck.hpp"

using namespace dvgait;
using namespace dvgait::featnet;
namespace fs = std::filesystem;
using numgrad::DType;
using numgrad::Tensor;

namespace {

FeatureNetConfig narrow(int w = 8) {
  FeatureNetConfig c;
  c.conv = {w, w, w, w, w, w, w, w, w, w};
  return c;
}

std::vector<gei::Gei> corpus(int subjects, int sequences, std::vector<double> views) {
  const auto specs = gaitgen::make_subjects(subjects, 11);
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

Tensor random_tensor(numgrad::Shape shape, numgrad::Rng& rng, double lo = -1, double hi = 1) {
  std::vector<double> v(static_cast<std::size_t>(numgrad::shape_numel(shape)));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_vector(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("feature net shapes and residual sums") {
  numgrad::Rng rng(1);
  FeatureNet full(FeatureNetConfig{}, rng);
  const auto zero = full.forward(Tensor::zeros({1, 1, 64, 64}));
  CHECK(zero.shape() == numgrad::Shape{1, kEmbeddingDim});
  for (double v : zero.to_vector()) CHECK(std::isfinite(v));

  FeatureNet net(narrow(), rng);
  const auto geis = corpus(1, 1, {0, 90});
  std::vector<const gei::Gei*> ptrs{&geis[0], &geis[1]};
  const auto t = net.trace(Tensor::from_vector({2, 1, 64, 64}, gei::stack_pixels(ptrs)));
  CHECK(t.pool1.shape() == numgrad::Shape{2, 8, 32, 32});
  CHECK(t.pool2.shape() == numgrad::Shape{2, 8, 16, 16});
  const auto p = t.pool1.to_vector(), c = t.conv4.to_vector(), s = t.sum1.to_vector();
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == static_cast<float>(p[i] + c[i]));
  const auto p2 = t.pool2.to_vector(), c7 = t.conv7.to_vector(), s2 = t.sum2.to_vector();
  for (std::size_t i = 0; i < s2.size(); ++i) CHECK(s2[i] == static_cast<float>(p2[i] + c7[i]));
  CHECK(t.embedding.shape() == numgrad::Shape{2, kEmbeddingDim});

  FeatureNetConfig bad;
  bad.conv[3] = 32;
  CHECK_THROWS_AS(FeatureNet(bad, rng), numgrad::ShapeError);
  bad = FeatureNetConfig{};
  bad.conv[8] = 64;
  CHECK_THROWS_AS(FeatureNet(bad, rng), numgrad::ShapeError);
  CHECK_THROWS_AS(net.forward(Tensor::zeros({1, 1, 32, 32})), numgrad::ShapeError);
}

TEST_CASE("multi_loss values and decomposition") {
  const int k = 5;
  const auto centers = Tensor::full({k, 3}, 0.5);
  const auto at_centers = Tensor::full({2, 3}, 0.5);
  const std::vector<int> labels{1, 4};
  const auto uniform = Tensor::zeros({2, k});
  const auto l = multi_loss(at_centers, uniform, labels, centers);
  CHECK(l.center == 0.0);
  CHECK(l.total.item() == doctest::Approx(std::log(5.0)).epsilon(1e-6));

  numgrad::Rng rng(2);
  const auto f = random_tensor({2, 3}, rng), logits = random_tensor({2, k}, rng);
  const auto m = multi_loss(f, logits, labels, centers, 0.008);
  CHECK(m.total.item() == doctest::Approx(m.softmax + 0.008 * m.center).epsilon(1e-6));

  const auto one = multi_loss(Tensor::from_vector({1, 2}, std::vector<double>{1, 0}),
                              Tensor::zeros({1, 2}, DType::f64), std::vector<int>{0},
                              Tensor::zeros({2, 2}, DType::f64), 0.008);
  CHECK(one.total.item() - std::log(2.0) == doctest::Approx(0.004).epsilon(1e-9));
}

TEST_CASE("multi_loss gradient at 64-bit") {
  for (std::uint64_t seed : {1, 2, 3}) {
    numgrad::Rng rng(seed);
    const auto centers = random_tensor({4, 6}, rng).to(DType::f64);
    const std::vector<int> labels{0, 3, 3};
    numgrad::GradcheckOptions opt;
    opt.seed = seed;
    const auto r = numgrad::gradcheck(
        [&](const std::vector<Tensor>& in) { return multi_loss(in[0], in[1], labels, centers, 0.008).total; },
        {random_tensor({3, 6}, rng), random_tensor({3, 4}, rng)}, opt);
    INFO(r.worst);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("whole feature net passes a gradient check on a narrow variant") {
  numgrad::Rng rng(4);
  FeatureNetConfig c = narrow();
  c.embedding = 6;
  FeatureNet net(c, rng);
  ClassifierHead head(c.embedding, 3, rng);
  net.to(DType::f64);
  head.to(DType::f64);
  const auto centers = random_tensor({3, 6}, rng);
  const std::vector<int> labels{2, 0};
  std::vector<Tensor> inputs{random_tensor({2, 1, 64, 64}, rng, 0.0, 1.0)};
  for (auto& [_, t] : net.parameters()) inputs.push_back(t);
  for (auto& [_, t] : head.parameters()) inputs.push_back(t);
  numgrad::GradcheckOptions opt;
  opt.max_elements_per_input = 6;
  // Thousands of PReLU units and pooling windows: some sit within one step of a kink.
  opt.skip_kinks = true;
  const auto r = numgrad::gradcheck(
      [&](const std::vector<Tensor>& in) {
        const auto f = net.forward(in[0]);
        return multi_loss(f, head.forward(f), labels, centers, 0.008).total;
      },
      inputs, opt);
  INFO(r.worst);
  CHECK(r.checked > 100);
  CHECK(r.skipped * 5 < r.checked);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("update_centers") {
  auto centers = Tensor::from_vector({3, 1}, std::vector<float>{0, 7, -2});
  const std::vector<int> labels{0, 0};
  update_centers(Tensor::from_vector({2, 1}, std::vector<float>{1, 1}), labels, centers, 0.5);
  CHECK(centers.at(0) == 0.5);
  CHECK(centers.at(1) == 7);
  CHECK(centers.at(2) == -2);

  auto same = Tensor::from_vector({1, 2}, std::vector<float>{0.25f, -1.5f});
  update_centers(Tensor::from_vector({2, 2}, std::vector<float>{0.0f, -1.0f, 0.5f, -2.0f}), labels, same, 0.5);
  CHECK(same.at(0) == 0.25);
  CHECK(same.at(1) == -1.5);

  auto c = Tensor::zeros({1, 1});
  const auto batch = Tensor::from_vector({1, 1}, std::vector<float>{1});
  for (int i = 1; i <= 10; ++i) {
    update_centers(batch, std::vector<int>{0}, c, 0.5);
    CHECK(c.at(0) == doctest::Approx(1.0 - std::pow(0.5, i)));
  }
  CHECK_THROWS(update_centers(batch, std::vector<int>{4}, c, 0.5));
}

TEST_CASE("feature training: zero epochs, determinism, extraction") {
  const auto geis = corpus(3, 1, {0, 90, 180});
  FeatTrainConfig cfg;
  cfg.net = narrow();
  cfg.batch_size = 4;
  cfg.epochs = 0;
  const auto dir = fs::temp_directory_path() / "dvgait_test_feat";
  fs::remove_all(dir);
  {
    FeatureModel m(cfg.net, 3, cfg.seed);
    train_features(m, geis, {}, cfg, dir);
    FeatureModel fresh(cfg.net, 3, cfg.seed);
    const auto a = extract(dir / kFeatureFile, cfg.net, geis);
    const auto b = extract(*fresh.net, geis);
    REQUIRE(a.size() == geis.size());
    CHECK(a[4].values == b[4].values);
  }
  cfg.epochs = 2;
  FeatureModel m1(cfg.net, 3, cfg.seed), m2(cfg.net, 3, cfg.seed);
  std::vector<gei::Gei> synth = corpus(3, 1, {45});
  for (auto& g : synth) g.origin = gei::Origin::synthesized;
  const auto r1 = train_features(m1, geis, synth, cfg);
  const auto r2 = train_features(m2, geis, synth, cfg);
  REQUIRE(r1.history.size() == 2);
  CHECK(r1.history[1].total == r2.history[1].total);
  CHECK(r1.history[1].accuracy == r2.history[1].accuracy);
  CHECK(r1.history[1].total == doctest::Approx(r1.history[1].softmax + 0.008 * r1.history[1].center));

  auto stray = synth;
  stray[0].subject = "999";
  FeatureModel m3(cfg.net, 3, cfg.seed);
  CHECK_THROWS_AS(train_features(m3, geis, stray, cfg), std::invalid_argument);

  // Eval-mode extraction does not depend on batch composition.
  const auto whole = extract(*m1.net, geis, 9);
  const auto single = extract(*m1.net, geis, 1);
  REQUIRE(whole.size() == geis.size());
  for (std::size_t i = 0; i < geis.size(); ++i) CHECK(whole[i].values == single[i].values);
  CHECK(whole[5].subject == geis[5].subject);
  CHECK(whole[5].view_deg == geis[5].view_deg);

  fs::create_directories(dir);
  write_embeddings_csv(dir / "emb.csv", whole);
  const auto back = read_embeddings_csv(dir / "emb.csv");
  REQUIRE(back.size() == whole.size());
  CHECK(back[2].values.size() == kEmbeddingDim);
  CHECK(back[2].values == whole[2].values);
  CHECK(back[2].sequence == whole[2].sequence);
  fs::remove_all(dir);
}

TEST_CASE("feature net separates identities it was trained on") {
  const auto train = corpus(4, 2, {0, 36, 72, 108, 144, 180});
  FeatTrainConfig cfg;
  cfg.net = narrow();
  cfg.batch_size = 8;
  cfg.epochs = 12;
  FeatureModel m(cfg.net, 4, cfg.seed);
  const auto r = train_features(m, train, {}, cfg);
  CHECK(r.history.back().total < r.history.front().total);
  CHECK(r.train_accuracy >= 0.95);
}
