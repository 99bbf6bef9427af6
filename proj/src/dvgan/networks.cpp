#include "dvgait/dvgan/networks.hpp"

#include <stdexcept>

namespace dvgait::dvgan {

using namespace numgrad;

void validate(const GeneratorConfig& config) {
  if (config.encoder.size() != 6 || config.decoder.size() != 6)
    throw std::invalid_argument("generator needs six encoder and six decoder widths");
  for (int w : config.encoder)
    if (w <= 0) throw std::invalid_argument("generator widths must be positive");
  for (int w : config.decoder)
    if (w <= 0) throw std::invalid_argument("generator widths must be positive");
  if (config.decoder.back() != 1) throw std::invalid_argument("last decoder width must be 1 (gray image)");
}

GeneratorNet::GeneratorNet(const GeneratorConfig& config, Rng& rng) : config_(config) {
  validate(config_);
  const auto& e = config_.encoder;
  const auto& d = config_.decoder;
  for (int i = 0; i < 6; ++i) {
    const std::string name = "e" + std::to_string(i + 1);
    const int in = i == 0 ? 1 : e[i - 1];
    enc_.push_back(std::make_unique<Conv2d>(in, e[i], 5, 2, 2, rng, name));
    register_module(name, *enc_.back());
    if (i > 0) {
      enc_bn_.push_back(std::make_unique<BatchNorm2d>(e[i], name + ".bn"));
      register_module(name + "_bn", *enc_bn_.back());
    } else {
      enc_bn_.push_back(nullptr);
    }
  }
  for (int i = 0; i < 6; ++i) {
    const std::string name = "d" + std::to_string(i + 1);
    // d1 sees the bottleneck; later layers see [previous decoder, mirrored encoder].
    const int in = i == 0 ? e[5] : d[i - 1] + e[5 - i];
    dec_.push_back(std::make_unique<ConvTranspose2d>(in, d[i], 5, 2, 2, 1, rng, name));
    register_module(name, *dec_.back());
    if (i < 5) {
      dec_bn_.push_back(std::make_unique<BatchNorm2d>(d[i], name + ".bn"));
      register_module(name + "_bn", *dec_bn_.back());
    } else {
      dec_bn_.push_back(nullptr);
    }
  }
  normal_init(*this, rng, 0.02);
}

Tensor GeneratorNet::encoder_layer(int i, const Tensor& x) {
  Tensor y = enc_[i]->forward(x);
  if (enc_bn_[i]) y = enc_bn_[i]->forward(y);
  return leaky_relu(y, config_.leaky_slope);
}

Tensor GeneratorNet::decoder_layer(int i, const Tensor& x) {
  Tensor y = dec_[i]->forward(x);
  if (i == 5) return numgrad::tanh(y);
  return relu(dec_bn_[i]->forward(y));
}

Tensor GeneratorNet::encode(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != gei::kSize || x.dim(3) != gei::kSize)
    throw ShapeError("generator input must be [N, 1, 64, 64], got " + shape_string(x.shape()));
  return encoder_layer(0, affine(x, 2.0, -1.0));
}

Tensor GeneratorNet::decode(const Tensor& z) {
  const Shape want = latent_shape();
  if (z.rank() != 4 || z.dim(1) != want[0] || z.dim(2) != want[1] || z.dim(3) != want[2])
    throw ShapeError("latent code must be [N, " + std::to_string(want[0]) + ", 32, 32], got " +
                     shape_string(z.shape()));
  std::vector<Tensor> skips{z};
  for (int i = 1; i < 6; ++i) skips.push_back(encoder_layer(i, skips.back()));
  Tensor y = decoder_layer(0, skips[5]);
  for (int i = 1; i < 6; ++i) y = decoder_layer(i, concat_channels(y, skips[5 - i]));
  return affine(y, 0.5, 0.5);
}

Tensor GeneratorNet::forward(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != gei::kSize || x.dim(3) != gei::kSize)
    throw ShapeError("generator input must be [N, 1, 64, 64], got " + shape_string(x.shape()));
  std::vector<Tensor> skips;
  Tensor h = affine(x, 2.0, -1.0);
  for (int i = 0; i < 6; ++i) {
    h = encoder_layer(i, h);
    skips.push_back(h);
  }
  Tensor y = decoder_layer(0, skips[5]);
  for (int i = 1; i < 6; ++i) y = decoder_layer(i, concat_channels(y, skips[5 - i]));
  return affine(y, 0.5, 0.5);
}

PairCritic::PairCritic(const CriticConfig& config, Rng& rng, const std::string& name)
    : config_(config),
      conv1_(2, config.conv1, 5, 2, 2, rng, name + ".conv1"),
      conv2_(config.conv1, config.conv2, 5, 1, 2, rng, name + ".conv2"),
      bn2_(config.conv2, name + ".bn2"),
      out_(config.conv2, 1, rng, name + ".out") {
  if (config.conv1 <= 0 || config.conv2 <= 0) throw std::invalid_argument("critic widths must be positive");
  register_module("conv1", conv1_);
  register_module("conv2", conv2_);
  register_module("bn2", bn2_);
  register_module("out", out_);
  normal_init(*this, rng, 0.02);
}

Tensor PairCritic::logits(const Tensor& reference, const Tensor& candidate) {
  if (reference.shape() != candidate.shape())
    throw ShapeError("critic pair shapes differ: " + shape_string(reference.shape()) + " vs " +
                     shape_string(candidate.shape()));
  Tensor h = concat_channels(affine(reference, 2.0, -1.0), affine(candidate, 2.0, -1.0));
  h = leaky_relu(conv1_.forward(h), config_.leaky_slope);
  h = leaky_relu(bn2_.forward(conv2_.forward(h)), config_.leaky_slope);
  return out_.forward(global_avg_pool(h));
}

Tensor PairCritic::probability(const Tensor& reference, const Tensor& candidate) {
  return sigmoid(logits(reference, candidate));
}

DvGan::DvGan(const GeneratorConfig& g, const CriticConfig& c, std::uint64_t seed) {
  Rng g_rng(Rng::mix(seed, 1)), d_rng(Rng::mix(seed, 2)), m_rng(Rng::mix(seed, 3));
  generator = std::make_unique<GeneratorNet>(g, g_rng);
  discriminator = std::make_unique<PairCritic>(c, d_rng, "disc");
  monitor = std::make_unique<PairCritic>(c, m_rng, "monitor");
}

Tensor to_tensor(std::span<const gei::Gei* const> geis) {
  return Tensor::from_vector({static_cast<std::int64_t>(geis.size()), 1, gei::kSize, gei::kSize},
                             gei::stack_pixels(geis));
}

Tensor to_tensor(const std::vector<gei::Gei>& geis) {
  std::vector<const gei::Gei*> ptrs;
  for (const auto& g : geis) ptrs.push_back(&g);
  return to_tensor(ptrs);
}

std::vector<float> image_pixels(const Tensor& batch, std::int64_t index) {
  if (batch.rank() != 4 || batch.dim(1) != 1 || batch.dim(2) * batch.dim(3) != gei::kPixels)
    throw ShapeError("expected [N, 1, 64, 64], got " + shape_string(batch.shape()));
  if (index < 0 || index >= batch.dim(0)) throw std::out_of_range("image index out of range");
  const auto values = batch.to(DType::f32);
  auto span = values.data<float>().subspan(static_cast<std::size_t>(index) * gei::kPixels, gei::kPixels);
  return {span.begin(), span.end()};
}

}  // namespace dvgait::dvgan
