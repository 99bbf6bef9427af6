#include "dvgait/numgrad/module.hpp"

#include <cmath>
#include <stdexcept>

namespace dvgait::numgrad {

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  std::vector<float> values(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& v : values) v = static_cast<float>(rng.uniform(-bound, bound));
  return Tensor::from_vector(std::move(shape), std::move(values));
}

bool ends_with(const std::string& s, std::string_view tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

}  // namespace

void Module::train(bool on) {
  training_ = on;
  for (auto& [_, child] : children_) child->train(on);
}

void Module::collect(const std::string& prefix, bool want_params, std::vector<NamedTensor>& out) const {
  for (const auto& [name, t] : want_params ? params_ : buffers_) out.emplace_back(prefix + name, t);
  for (const auto& [name, child] : children_) child->collect(prefix + name + ".", want_params, out);
}

std::vector<NamedTensor> Module::parameters() const {
  std::vector<NamedTensor> out;
  collect("", true, out);
  return out;
}

std::vector<NamedTensor> Module::buffers() const {
  std::vector<NamedTensor> out;
  collect("", false, out);
  return out;
}

std::vector<NamedTensor> Module::state() const {
  auto out = parameters();
  for (auto& b : buffers()) out.push_back(std::move(b));
  return out;
}

void Module::set_requires_grad(bool value) {
  for (auto& [_, t] : parameters()) t.set_requires_grad(value);
}

void Module::zero_grad() {
  for (auto& [_, t] : parameters()) t.zero_grad();
}

void Module::to(DType dtype) {
  for (auto& [_, t] : state()) t.convert_(dtype);
}

std::int64_t Module::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [_, t] : parameters()) n += t.numel();
  return n;
}

Tensor& Module::register_parameter(std::string name, Tensor value) {
  value.set_requires_grad(true);
  params_.emplace_back(std::move(name), value);
  return params_.back().second;
}

Tensor& Module::register_buffer(std::string name, Tensor value) {
  buffers_.emplace_back(std::move(name), std::move(value));
  return buffers_.back().second;
}

void Module::register_module(std::string name, Module& child) { children_.emplace_back(std::move(name), &child); }

Conv2d::Conv2d(std::int64_t in, std::int64_t out, int kernel, int stride, int padding, Rng& rng,
               std::string layer)
    : stride_(stride), padding_(padding), layer_(std::move(layer)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel));
  weight = register_parameter("weight", uniform_tensor({out, in, kernel, kernel}, bound, rng));
  bias = register_parameter("bias", Tensor::zeros({out}));
}

Tensor Conv2d::forward(const Tensor& x) const { return conv2d(x, weight, bias, stride_, padding_, layer_); }

ConvTranspose2d::ConvTranspose2d(std::int64_t in, std::int64_t out, int kernel, int stride, int padding,
                                 int output_padding, Rng& rng, std::string layer)
    : stride_(stride), padding_(padding), output_padding_(output_padding), layer_(std::move(layer)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(out * kernel * kernel));
  weight = register_parameter("weight", uniform_tensor({in, out, kernel, kernel}, bound, rng));
  bias = register_parameter("bias", Tensor::zeros({out}));
}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  return conv_transpose2d(x, weight, bias, stride_, padding_, output_padding_, layer_);
}

BatchNorm2d::BatchNorm2d(std::int64_t channels, std::string layer, double momentum, double epsilon)
    : momentum_(momentum), epsilon_(epsilon), layer_(std::move(layer)) {
  gamma = register_parameter("gamma", Tensor::full({channels}, 1.0));
  beta = register_parameter("beta", Tensor::zeros({channels}));
  running_mean = register_buffer("running_mean", Tensor::zeros({channels}));
  running_var = register_buffer("running_var", Tensor::full({channels}, 1.0));
}

Tensor BatchNorm2d::forward(const Tensor& x) {
  BatchNormStats stats{running_mean, running_var};
  return batch_norm2d(x, gamma, beta, is_training() ? NormMode::train : NormMode::eval, stats, momentum_,
                      epsilon_, layer_);
}

Linear::Linear(std::int64_t in, std::int64_t out, Rng& rng, std::string layer) : layer_(std::move(layer)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = register_parameter("weight", uniform_tensor({out, in}, bound, rng));
  bias = register_parameter("bias", Tensor::zeros({out}));
}

Tensor Linear::forward(const Tensor& x) const { return dense(x, weight, bias, layer_); }

PReLU::PReLU(std::int64_t channels, double init) {
  slope = register_parameter("slope", Tensor::full({channels}, init));
}

Tensor PReLU::forward(const Tensor& x) const { return prelu(x, slope); }

void normal_init(Module& module, Rng& rng, double stddev) {
  for (auto& [name, t] : module.parameters()) {
    double mean = 0.0, spread = stddev;
    if (ends_with(name, "gamma")) {
      mean = 1.0;
    } else if (ends_with(name, "bias") || ends_with(name, "beta")) {
      spread = 0.0;
    } else if (!ends_with(name, "weight")) {
      continue;
    }
    std::vector<double> values(static_cast<std::size_t>(t.numel()));
    for (auto& v : values) v = spread > 0 ? rng.normal(mean, spread) : mean;
    t.assign_(Tensor::from_values(t.shape(), values, DType::f64));
  }
}

}  // namespace dvgait::numgrad
