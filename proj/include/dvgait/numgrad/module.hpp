#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dvgait/numgrad/ops.hpp"
#include "dvgait/numgrad/random.hpp"

namespace dvgait::numgrad {

using NamedTensor = std::pair<std::string, Tensor>;

/// Owner of named parameters, non-trainable buffers and child modules.
/// Children are registered by reference, so modules are pinned in memory.
class Module {
 public:
  Module() = default;
  virtual ~Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  void train(bool on = true);
  void eval() { train(false); }
  bool is_training() const noexcept { return training_; }

  /// Parameters with dotted paths ("e3.weight"), depth-first in registration order.
  std::vector<NamedTensor> parameters() const;
  std::vector<NamedTensor> buffers() const;
  /// Parameters followed by buffers; this is what checkpoints store.
  std::vector<NamedTensor> state() const;

  void set_requires_grad(bool value);
  void zero_grad();
  /// Converts every parameter and buffer in place.
  void to(DType dtype);
  std::int64_t parameter_count() const;

 protected:
  Tensor& register_parameter(std::string name, Tensor value);
  Tensor& register_buffer(std::string name, Tensor value);
  void register_module(std::string name, Module& child);

 private:
  void collect(const std::string& prefix, bool want_params, std::vector<NamedTensor>& out) const;

  bool training_ = true;
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<std::pair<std::string, Tensor>> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
};

/// Weights drawn U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
class Conv2d : public Module {
 public:
  Conv2d(std::int64_t in, std::int64_t out, int kernel, int stride, int padding, Rng& rng,
         std::string layer = "conv2d");
  Tensor forward(const Tensor& x) const;
  Tensor weight, bias;

 private:
  int stride_, padding_;
  std::string layer_;
};

class ConvTranspose2d : public Module {
 public:
  ConvTranspose2d(std::int64_t in, std::int64_t out, int kernel, int stride, int padding, int output_padding,
                  Rng& rng, std::string layer = "deconv2d");
  Tensor forward(const Tensor& x) const;
  Tensor weight, bias;

 private:
  int stride_, padding_, output_padding_;
  std::string layer_;
};

class BatchNorm2d : public Module {
 public:
  explicit BatchNorm2d(std::int64_t channels, std::string layer = "batchnorm2d", double momentum = 0.9,
                       double epsilon = 1e-5);
  Tensor forward(const Tensor& x);
  Tensor gamma, beta, running_mean, running_var;

 private:
  double momentum_, epsilon_;
  std::string layer_;
};

class Linear : public Module {
 public:
  Linear(std::int64_t in, std::int64_t out, Rng& rng, std::string layer = "dense");
  Tensor forward(const Tensor& x) const;
  Tensor weight, bias;

 private:
  std::string layer_;
};

class PReLU : public Module {
 public:
  explicit PReLU(std::int64_t channels, double init = 0.25);
  Tensor forward(const Tensor& x) const;
  Tensor slope;
};

/// Re-draws every tensor whose path ends in "weight" from N(0, stddev) and
/// every BN gamma from N(1, stddev); biases and betas are zeroed.
void normal_init(Module& module, Rng& rng, double stddev);

}  // namespace dvgait::numgrad
