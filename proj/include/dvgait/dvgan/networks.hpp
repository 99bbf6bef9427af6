#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dvgait/gei/gei.hpp"
#include "dvgait/numgrad/module.hpp"

namespace dvgait::dvgan {

using numgrad::Tensor;

/// Filter counts of the six stride-2 encoder convs and six stride-2 decoder
/// deconvs. The last decoder entry is the output image channel count.
struct GeneratorConfig {
  std::vector<int> encoder{64, 128, 256, 512, 512, 512};
  std::vector<int> decoder{512, 512, 256, 128, 64, 1};
  double leaky_slope = 0.2;
};

void validate(const GeneratorConfig& config);

/// U-Net generator. The first encoder layer alone forms the encoder; its
/// output is the latent code. The decoder re-derives every deeper skip
/// feature from the code, so decode(encode(x)) is the whole network.
class GeneratorNet : public numgrad::Module {
 public:
  GeneratorNet(const GeneratorConfig& config, numgrad::Rng& rng);

  /// x: [N, 1, 64, 64] in [0, 1] -> code [N, encoder[0], 32, 32].
  Tensor encode(const Tensor& x);
  /// code -> [N, 1, 64, 64] in [0, 1].
  Tensor decode(const Tensor& z);
  /// Single-pass forward that does not go through encode/decode.
  Tensor forward(const Tensor& x);

  const GeneratorConfig& config() const noexcept { return config_; }
  numgrad::Shape latent_shape() const { return {config_.encoder[0], 32, 32}; }

 private:
  Tensor encoder_layer(int i, const Tensor& x);
  Tensor decoder_layer(int i, const Tensor& x);

  GeneratorConfig config_;
  std::vector<std::unique_ptr<numgrad::Conv2d>> enc_;
  std::vector<std::unique_ptr<numgrad::BatchNorm2d>> enc_bn_;  // null for e1
  std::vector<std::unique_ptr<numgrad::ConvTranspose2d>> dec_;
  std::vector<std::unique_ptr<numgrad::BatchNorm2d>> dec_bn_;  // null for d6
};

struct CriticConfig {
  int conv1 = 64;
  int conv2 = 128;
  double leaky_slope = 0.2;
};

/// Two-image critic used for both the discriminator and the monitor. The
/// pair is stacked as two input channels; a stride-2 conv, a BN conv, global
/// averaging and a one-unit dense layer give one logit per pair.
class PairCritic : public numgrad::Module {
 public:
  PairCritic(const CriticConfig& config, numgrad::Rng& rng, const std::string& name);

  /// reference, candidate: [N, 1, 64, 64] in [0, 1] -> logits [N, 1].
  Tensor logits(const Tensor& reference, const Tensor& candidate);
  /// sigmoid(logits)
  Tensor probability(const Tensor& reference, const Tensor& candidate);

 private:
  CriticConfig config_;
  numgrad::Conv2d conv1_;
  numgrad::Conv2d conv2_;
  numgrad::BatchNorm2d bn2_;
  numgrad::Linear out_;
};

using DiscriminatorNet = PairCritic;
using MonitorNet = PairCritic;

/// First-layer feature map of the generator plus its labels.
struct LatentCode {
  Tensor z;  // [1, C, 32, 32] or batched
  double view_deg = 0.0;
  std::string subject;
};

/// Generator, discriminator and monitor with one shared initialization seed.
struct DvGan {
  DvGan(const GeneratorConfig& g, const CriticConfig& c, std::uint64_t seed);
  std::unique_ptr<GeneratorNet> generator;
  std::unique_ptr<PairCritic> discriminator;
  std::unique_ptr<PairCritic> monitor;
};

/// GEIs -> [N, 1, 64, 64] f32 tensor.
Tensor to_tensor(std::span<const gei::Gei* const> geis);
Tensor to_tensor(const std::vector<gei::Gei>& geis);
/// Row `index` of an [N, 1, 64, 64] tensor as GEI pixels.
std::vector<float> image_pixels(const Tensor& batch, std::int64_t index);

}  // namespace dvgait::dvgan
