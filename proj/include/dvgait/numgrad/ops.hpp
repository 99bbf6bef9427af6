#pragma once

#include <span>
#include <string_view>

#include "dvgait/numgrad/tensor.hpp"

namespace dvgait::numgrad {

// --- convolution ------------------------------------------------------------

/// NCHW convolution. `weight` is [Cout, Cin, k, k], `bias` is [Cout].
/// Output extent is floor((H + 2*padding - k) / stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding,
              std::string_view layer = "conv2d");

/// Transposed convolution (the adjoint of conv2d). `weight` is
/// [Cin, Cout, k, k]. Output extent is
/// (H - 1) * stride - 2 * padding + k + output_padding.
Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                        int padding, int output_padding, std::string_view layer = "deconv2d");

// --- normalization ----------------------------------------------------------

struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
};

enum class NormMode { train, eval };

/// Per-channel batch normalization over (N, H, W). In train mode the running
/// statistics are updated as running = momentum * running + (1 - momentum) * batch,
/// using the unbiased batch variance.
Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, NormMode mode,
                    BatchNormStats& stats, double momentum, double epsilon,
                    std::string_view layer = "batchnorm2d");

// --- elementwise ------------------------------------------------------------

Tensor leaky_relu(const Tensor& x, double slope);
Tensor relu(const Tensor& x);
/// Per-channel learned slope; `slope` has one entry per channel (dim 1 of x).
Tensor prelu(const Tensor& x, const Tensor& slope);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// alpha * a + (1 - alpha) * b
Tensor lerp(const Tensor& a, const Tensor& b, double alpha);
/// Affine map factor * x + offset.
Tensor affine(const Tensor& x, double factor, double offset);

// --- structure --------------------------------------------------------------

Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor reshape(const Tensor& x, Shape shape);
/// [N, ...] -> [N, prod(...)]
Tensor flatten(const Tensor& x);
/// Selects samples [begin, end) along dim 0.
Tensor slice_batch(const Tensor& x, std::int64_t begin, std::int64_t end);
/// Stacks same-shaped tensors along a new leading axis after dim 0 merge:
/// each part is [n_i, ...]; result is [sum n_i, ...].
Tensor concat_batch(std::span<const Tensor> parts);

// --- pooling / dense --------------------------------------------------------

/// 2x2 max pooling with stride 2; ties resolve to the first element in
/// row-major window order.
Tensor max_pool2x2(const Tensor& x);
/// [N, C, H, W] -> [N, C]
Tensor global_avg_pool(const Tensor& x);
/// x [N, in], weight [out, in], bias [out].
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias, std::string_view layer = "dense");

// --- losses -----------------------------------------------------------------

/// Mean absolute difference over all elements.
Tensor l1_loss(const Tensor& pred, const Tensor& target);
/// Mean binary cross-entropy of sigmoid(logits) against labels, evaluated
/// stably on logits: max(l, 0) - l * y + log(1 + exp(-|l|)).
Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels);
Tensor bce_with_logits(const Tensor& logits, double label);
/// Mean over the batch of -log softmax(logits)[label].
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);
/// (gamma / 2) * sum_i ||features_i - centers[label_i]||^2. Centers are
/// constants; see featnet for their update.
Tensor center_loss(const Tensor& features, std::span<const int> labels, const Tensor& centers,
                   double gamma);

/// Scalar binary cross-entropy on a probability (reporting helper).
double bce(double probability, int label);

}  // namespace dvgait::numgrad
