#include "dvgait/featnet/feature_net.hpp"

#include <stdexcept>
#include <string>

namespace dvgait::featnet {

using namespace numgrad;

void validate(const FeatureNetConfig& config) {
  for (int w : config.conv)
    if (w <= 0) throw std::invalid_argument("feature net widths must be positive");
  if (config.embedding <= 0) throw std::invalid_argument("embedding size must be positive");
  const auto& c = config.conv;
  if (c[1] != c[3])
    throw ShapeError("first residual sum: pool1 has " + std::to_string(c[1]) + " channels, conv4 has " +
                     std::to_string(c[3]));
  if (c[4] != c[6])
    throw ShapeError("second residual sum: pool2 has " + std::to_string(c[4]) + " channels, conv7 has " +
                     std::to_string(c[6]));
  if (c[6] != c[8])
    throw ShapeError("third residual sum: sum2 has " + std::to_string(c[6]) + " channels, conv9 has " +
                     std::to_string(c[8]));
}

FeatureNet::FeatureNet(const FeatureNetConfig& config, Rng& rng) : config_(config) {
  validate(config_);
  const auto& c = config_.conv;
  for (int i = 0; i < 10; ++i) {
    const int in = i == 0 ? 1 : c[i - 1];
    const std::string name = "conv" + std::to_string(i + 1);
    convs_.push_back(std::make_unique<Conv2d>(in, c[i], 3, 1, 1, rng, name));
    acts_.push_back(std::make_unique<PReLU>(c[i]));
    register_module(name, *convs_.back());
    register_module("act" + std::to_string(i + 1), *acts_.back());
  }
  fc_ = std::make_unique<Linear>(static_cast<std::int64_t>(c[9]) * 16 * 16, config_.embedding, rng, "fc1");
  register_module("fc1", *fc_);
}

Tensor FeatureNet::block(int i, const Tensor& x) { return acts_[i]->forward(convs_[i]->forward(x)); }

FeatureNet::Trace FeatureNet::trace(const Tensor& x) {
  if (x.rank() != 4 || x.dim(1) != 1 || x.dim(2) != gei::kSize || x.dim(3) != gei::kSize)
    throw ShapeError("feature net input must be [N, 1, 64, 64], got " + shape_string(x.shape()));
  Trace t;
  Tensor h = block(1, block(0, x));
  t.pool1 = max_pool2x2(h);
  t.conv4 = block(3, block(2, t.pool1));
  t.sum1 = add(t.pool1, t.conv4);
  t.pool2 = max_pool2x2(block(4, t.sum1));
  t.conv7 = block(6, block(5, t.pool2));
  t.sum2 = add(t.pool2, t.conv7);
  t.conv9 = block(8, block(7, t.sum2));
  t.sum3 = add(t.sum2, t.conv9);
  t.embedding = fc_->forward(flatten(block(9, t.sum3)));
  return t;
}

Tensor FeatureNet::forward(const Tensor& x) { return trace(x).embedding; }

ClassifierHead::ClassifierHead(int embedding, int classes, Rng& rng)
    : classes_(classes), fc_(embedding, classes, rng, "head") {
  if (classes < 2) throw std::invalid_argument("classifier needs at least two classes");
  register_module("fc", fc_);
}

MultiLoss multi_loss(const Tensor& embeddings, const Tensor& logits, std::span<const int> labels,
                     const Tensor& centers, double gamma) {
  MultiLoss out;
  Tensor softmax = softmax_cross_entropy(logits, labels);
  Tensor center = center_loss(embeddings, labels, centers, 1.0);
  out.softmax = softmax.item();
  out.center = center.item();
  out.total = add(softmax, scale(center, gamma));
  return out;
}

void update_centers(const Tensor& embeddings, std::span<const int> labels, Tensor& centers, double rate) {
  if (embeddings.rank() != 2 || centers.rank() != 2 || embeddings.dim(1) != centers.dim(1))
    throw ShapeError("update_centers: embeddings " + shape_string(embeddings.shape()) + " vs centers " +
                     shape_string(centers.shape()));
  if (static_cast<std::int64_t>(labels.size()) != embeddings.dim(0))
    throw ShapeError("update_centers: label count differs from batch size");
  const std::int64_t k = centers.dim(0), d = centers.dim(1);
  const auto f = embeddings.to_vector();
  std::vector<double> sums(static_cast<std::size_t>(k * d), 0.0);
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 0 || l >= k) throw std::out_of_range("update_centers: label without a center");
    ++counts[l];
    for (std::int64_t j = 0; j < d; ++j) sums[l * d + j] += f[i * d + j];
  }
  auto c = centers.to_vector();
  for (std::int64_t l = 0; l < k; ++l) {
    if (counts[l] == 0) continue;
    for (std::int64_t j = 0; j < d; ++j) {
      const double mean = sums[l * d + j] / counts[l];
      c[l * d + j] += rate * (mean - c[l * d + j]);
    }
  }
  centers.assign_(Tensor::from_values(centers.shape(), c, centers.dtype()));
}

}  // namespace dvgait::featnet
