#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "dvgait/gei/gei.hpp"
#include "dvgait/numgrad/module.hpp"

namespace dvgait::featnet {

using numgrad::Tensor;

inline constexpr int kEmbeddingDim = 512;

/// Filter counts of the ten 3x3 convs. Residual sums need
/// conv[1] == conv[3], conv[4] == conv[6] and conv[6] == conv[8].
struct FeatureNetConfig {
  std::array<int, 10> conv{32, 64, 64, 64, 128, 128, 128, 128, 128, 128};
  int embedding = kEmbeddingDim;
};

void validate(const FeatureNetConfig& config);

/// Residual PReLU CNN mapping a 64x64 GEI to an embedding. Two 2x2 pools
/// bring the map to 16x16 before the dense layer.
class FeatureNet : public numgrad::Module {
 public:
  FeatureNet(const FeatureNetConfig& config, numgrad::Rng& rng);

  /// Intermediate maps kept for inspection.
  struct Trace {
    Tensor pool1, conv4, sum1, pool2, conv7, sum2, conv9, sum3, embedding;
  };

  /// x: [N, 1, 64, 64] -> [N, embedding]
  Tensor forward(const Tensor& x);
  Trace trace(const Tensor& x);

  const FeatureNetConfig& config() const noexcept { return config_; }

 private:
  Tensor block(int i, const Tensor& x);

  FeatureNetConfig config_;
  std::vector<std::unique_ptr<numgrad::Conv2d>> convs_;
  std::vector<std::unique_ptr<numgrad::PReLU>> acts_;
  std::unique_ptr<numgrad::Linear> fc_;
};

/// Training-only softmax classifier over subjects.
class ClassifierHead : public numgrad::Module {
 public:
  ClassifierHead(int embedding, int classes, numgrad::Rng& rng);
  Tensor forward(const Tensor& embedding) const { return fc_.forward(embedding); }
  int classes() const noexcept { return classes_; }

 private:
  int classes_;
  numgrad::Linear fc_;
};

struct MultiLoss {
  Tensor total;
  double softmax = 0;
  /// 0.5 * sum ||f - c||^2, before the gamma weight.
  double center = 0;
};

/// softmax_ce(logits) + gamma * 0.5 * sum_i ||f_i - c_{l_i}||^2
MultiLoss multi_loss(const Tensor& embeddings, const Tensor& logits, std::span<const int> labels,
                     const Tensor& centers, double gamma = 0.008);

/// For every class present in the batch, moves its center a fraction `rate`
/// toward the batch mean of that class. Other rows are left untouched.
void update_centers(const Tensor& embeddings, std::span<const int> labels, Tensor& centers, double rate = 0.5);

}  // namespace dvgait::featnet
