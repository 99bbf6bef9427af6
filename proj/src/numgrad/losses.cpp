#include <algorithm>
#include <cmath>
#include <string>

#include "dvgait/numgrad/ops.hpp"

namespace dvgait::numgrad {

namespace {

Tensor scalar_like(const Tensor& like, double value) { return Tensor::full({1}, value, like.dtype()); }

// log(1 + exp(-|l|)) + max(l, 0) - l * y
double bce_term(double logit, double label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

double stable_sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape() || pred.dtype() != target.dtype()) {
    throw ShapeError("l1_loss: " + shape_string(pred.shape()) + " vs " + shape_string(target.shape()));
  }
  const auto n = static_cast<double>(pred.numel());
  const double value = dispatch(pred.dtype(), [&]<class T>(T) {
    auto p = pred.data<T>();
    auto t = target.data<T>();
    double acc = 0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - t[i]);
    return acc / n;
  });
  return record("l1_loss", scalar_like(pred, value), {pred, target}, [pred, target, n](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto p = pred.data<T>();
      auto t = target.data<T>();
      const double scale = g.at(0) / n;
      std::vector<T> dp(p.size()), dt(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(p[i]) - t[i];
        const double s = d > 0 ? scale : (d < 0 ? -scale : 0.0);
        dp[i] = static_cast<T>(s);
        dt[i] = static_cast<T>(-s);
      }
      std::vector<Tensor> grads(2);
      if (pred.requires_grad()) grads[0] = Tensor::from_vector(pred.shape(), std::move(dp));
      if (target.requires_grad()) grads[1] = Tensor::from_vector(target.shape(), std::move(dt));
      return grads;
    });
  });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels) {
  if (static_cast<std::int64_t>(labels.size()) != logits.numel()) {
    throw ShapeError("bce_with_logits: " + std::to_string(labels.size()) + " labels for " +
                     shape_string(logits.shape()));
  }
  std::vector<double> y(labels.begin(), labels.end());
  const auto l = logits.to_vector();
  double acc = 0;
  for (std::size_t i = 0; i < l.size(); ++i) acc += bce_term(l[i], y[i]);
  const auto n = static_cast<double>(l.size());
  return record("bce_with_logits", scalar_like(logits, acc / n), {logits}, [logits, y, n](const Tensor& g) {
    const auto l = logits.to_vector();
    std::vector<double> dl(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) dl[i] = g.at(0) * (stable_sigmoid(l[i]) - y[i]) / n;
    return std::vector<Tensor>{Tensor::from_values(logits.shape(), dl, logits.dtype())};
  });
}

Tensor bce_with_logits(const Tensor& logits, double label) {
  std::vector<double> labels(static_cast<std::size_t>(logits.numel()), label);
  return bce_with_logits(logits, labels);
}

Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || static_cast<std::int64_t>(labels.size()) != logits.dim(0)) {
    throw ShapeError("softmax_cross_entropy: logits " + shape_string(logits.shape()) + " with " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw std::out_of_range("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                              std::to_string(k) + ")");
    }
  }
  const auto l = logits.to_vector();
  // Row-wise softmax, kept for the backward pass.
  std::vector<double> prob(l.size());
  double loss = 0;
  for (std::int64_t r = 0; r < n; ++r) {
    const double* row = l.data() + r * k;
    const double peak = *std::max_element(row, row + k);
    double z = 0;
    for (std::int64_t c = 0; c < k; ++c) z += std::exp(row[c] - peak);
    const double log_z = peak + std::log(z);
    for (std::int64_t c = 0; c < k; ++c) prob[r * k + c] = std::exp(row[c] - log_z);
    loss += log_z - row[labels[r]];
  }
  std::vector<int> y(labels.begin(), labels.end());
  return record("softmax_cross_entropy", scalar_like(logits, loss / n), {logits},
                [logits, prob, y, n, k](const Tensor& g) {
                  std::vector<double> dl(prob);
                  for (std::int64_t r = 0; r < n; ++r) dl[r * k + y[r]] -= 1.0;
                  const double scale = g.at(0) / n;
                  for (auto& v : dl) v *= scale;
                  return std::vector<Tensor>{Tensor::from_values(logits.shape(), dl, logits.dtype())};
                });
}

Tensor center_loss(const Tensor& features, std::span<const int> labels, const Tensor& centers, double gamma) {
  if (features.rank() != 2 || centers.rank() != 2 || features.dim(1) != centers.dim(1) ||
      static_cast<std::int64_t>(labels.size()) != features.dim(0)) {
    throw ShapeError("center_loss: features " + shape_string(features.shape()) + ", centers " +
                     shape_string(centers.shape()) + ", " + std::to_string(labels.size()) + " labels");
  }
  const std::int64_t n = features.dim(0), d = features.dim(1), k = centers.dim(0);
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw std::out_of_range("center_loss: no center for label " + std::to_string(label));
    }
  }
  const auto f = features.to_vector();
  const auto c = centers.to_vector();
  std::vector<double> diff(f.size());
  double acc = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < d; ++j) {
      const double v = f[i * d + j] - c[labels[i] * d + j];
      diff[i * d + j] = v;
      acc += v * v;
    }
  }
  return record("center_loss", scalar_like(features, 0.5 * gamma * acc), {features},
                [features, diff, gamma](const Tensor& g) {
                  std::vector<double> df(diff.size());
                  const double scale = g.at(0) * gamma;
                  for (std::size_t i = 0; i < df.size(); ++i) df[i] = scale * diff[i];
                  return std::vector<Tensor>{Tensor::from_values(features.shape(), df, features.dtype())};
                });
}

double bce(double probability, int label) {
  constexpr double kFloor = 1e-12;
  const double p = std::clamp(probability, kFloor, 1.0 - kFloor);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

}  // namespace dvgait::numgrad
