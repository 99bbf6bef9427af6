#include "dvgait/numgrad/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dvgait::numgrad {

namespace detail {

struct Node {
  std::uint64_t sequence = 0;
  std::string op;
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

}  // namespace detail

namespace {

std::atomic<std::uint64_t> g_sequence{0};
thread_local bool t_grad_enabled = true;

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, detail::Buffer buffer) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::make_shared<detail::Buffer>(std::move(buffer));
  return impl;
}

void check_shape(const Shape& shape, std::size_t length) {
  for (auto extent : shape) {
    if (extent <= 0) throw ShapeError("tensor extents must be positive, got " + shape_string(shape));
  }
  if (static_cast<std::size_t>(shape_numel(shape)) != length) {
    throw ShapeError("shape " + shape_string(shape) + " does not match " + std::to_string(length) +
                     " values");
  }
}

detail::Buffer convert_buffer(const detail::Buffer& source, DType dtype) {
  return std::visit(
      [&](const auto& values) -> detail::Buffer {
        if (dtype == DType::f32) return std::vector<float>(values.begin(), values.end());
        return std::vector<double>(values.begin(), values.end());
      },
      source);
}

DType buffer_dtype(const detail::Buffer& buffer) {
  return std::holds_alternative<std::vector<float>>(buffer) ? DType::f32 : DType::f64;
}

// Sums `addend` into a fresh buffer so that shared gradient tensors are never
// mutated behind another consumer's back.
Tensor sum_into_new(const Tensor& base, const Tensor& addend) {
  if (base.shape() != addend.shape() || base.dtype() != addend.dtype()) {
    throw ShapeError("gradient accumulation mismatch: " + shape_string(base.shape()) + " vs " +
                     shape_string(addend.shape()));
  }
  return dispatch(base.dtype(), [&]<class T>(T) {
    auto a = base.data<T>();
    auto b = addend.data<T>();
    std::vector<T> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return Tensor::from_vector(base.shape(), std::move(out));
  });
}

void check_finite(const Tensor& value, std::string_view op) {
  dispatch(value.dtype(), [&]<class T>(T) {
    for (T v : value.data<T>()) {
      if (!std::isfinite(v)) {
        throw NumericError(std::string(op) + " produced a non-finite value (shape " +
                           shape_string(value.shape()) + ")");
      }
    }
  });
}

}  // namespace

std::string_view dtype_name(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(Shape shape, DType dtype) { return full(std::move(shape), 0.0, dtype); }

Tensor Tensor::full(Shape shape, double value, DType dtype) {
  const auto n = static_cast<std::size_t>(shape_numel(shape));
  check_shape(shape, n);
  if (dtype == DType::f32) {
    return Tensor(make_impl(std::move(shape), std::vector<float>(n, static_cast<float>(value))));
  }
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::from_vector(Shape shape, std::vector<float> values) {
  check_shape(shape, values.size());
  return Tensor(make_impl(std::move(shape), std::move(values)));
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values) {
  check_shape(shape, values.size());
  return Tensor(make_impl(std::move(shape), std::move(values)));
}

Tensor Tensor::from_values(Shape shape, std::span<const double> values, DType dtype) {
  if (dtype == DType::f32) {
    return from_vector(std::move(shape), std::vector<float>(values.begin(), values.end()));
  }
  return from_vector(std::move(shape), std::vector<double>(values.begin(), values.end()));
}

Tensor Tensor::wrap(std::shared_ptr<detail::TensorImpl> impl) { return Tensor(std::move(impl)); }

const Shape& Tensor::shape() const { return impl_->shape; }

std::int64_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape()));
  }
  return impl_->shape[axis];
}

std::size_t Tensor::rank() const { return impl_->shape.size(); }
std::int64_t Tensor::numel() const { return shape_numel(impl_->shape); }
DType Tensor::dtype() const { return buffer_dtype(*impl_->data); }

template <class T>
std::span<const T> Tensor::data() const {
  auto* values = std::get_if<std::vector<T>>(impl_->data.get());
  if (!values) {
    throw std::logic_error(std::string("tensor holds ") + std::string(dtype_name(dtype())) +
                           ", requested " + std::string(dtype_name(dtype_of<T>())));
  }
  return {values->data(), values->size()};
}

template <class T>
std::span<T> Tensor::mutable_data() {
  auto* values = std::get_if<std::vector<T>>(impl_->data.get());
  if (!values) {
    throw std::logic_error(std::string("tensor holds ") + std::string(dtype_name(dtype())) +
                           ", requested " + std::string(dtype_name(dtype_of<T>())));
  }
  return {values->data(), values->size()};
}

template std::span<const float> Tensor::data<float>() const;
template std::span<const double> Tensor::data<double>() const;
template std::span<float> Tensor::mutable_data<float>();
template std::span<double> Tensor::mutable_data<double>();

std::vector<double> Tensor::to_vector() const {
  return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); },
                    *impl_->data);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() needs a single element, shape " + shape_string(shape()));
  return at(0);
}

double Tensor::at(std::int64_t flat_index) const {
  return std::visit([&](const auto& v) { return static_cast<double>(v.at(flat_index)); },
                    *impl_->data);
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool value) {
  if (impl_->grad_fn) throw std::logic_error("requires_grad can only be changed on leaves");
  impl_->requires_grad = value;
  return *this;
}

bool Tensor::is_leaf() const { return impl_->grad_fn == nullptr; }

Tensor Tensor::grad() const {
  if (!impl_->grad) return {};
  return Tensor(make_impl(impl_->shape, *impl_->grad));
}

void Tensor::zero_grad() { impl_->grad.reset(); }

void Tensor::backward() const {
  if (numel() != 1) throw ShapeError("backward() needs a scalar root, shape " + shape_string(shape()));
  Tape(*this).backward(Tensor::full(shape(), 1.0, dtype()));
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::to(DType dtype) const {
  return Tensor(make_impl(impl_->shape, convert_buffer(*impl_->data, dtype)));
}

void Tensor::convert_(DType dtype) {
  impl_->data = std::make_shared<detail::Buffer>(convert_buffer(*impl_->data, dtype));
  if (impl_->grad) impl_->grad = std::make_shared<detail::Buffer>(convert_buffer(*impl_->grad, dtype));
}

Tensor Tensor::clone() const { return Tensor(make_impl(impl_->shape, *impl_->data)); }

void Tensor::assign_(const Tensor& other) {
  if (other.shape() != shape()) {
    throw ShapeError("assign_: shape " + shape_string(other.shape()) + " into " + shape_string(shape()));
  }
  *impl_->data = convert_buffer(*other.impl_->data, dtype());
}

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor record(std::string_view op, Tensor value, std::vector<Tensor> inputs, BackwardFn backward) {
  check_finite(value, op);
  if (!t_grad_enabled) return value;
  const bool needs_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (!needs_grad) return value;
  auto node = std::make_shared<detail::Node>();
  node->sequence = g_sequence.fetch_add(1, std::memory_order_relaxed);
  node->op = std::string(op);
  node->inputs = std::move(inputs);
  node->backward = std::move(backward);
  value.impl()->grad_fn = std::move(node);
  value.impl()->requires_grad = true;
  return value;
}

Tape::Tape(const Tensor& root) : root_(root) {
  if (!root.defined()) throw std::logic_error("Tape over an undefined tensor");
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::shared_ptr<detail::Node>> stack;
  if (root.impl()->grad_fn) stack.push_back(root.impl()->grad_fn);
  while (!stack.empty()) {
    auto node = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(node.get()).second) continue;
    for (const auto& input : node->inputs) {
      if (input.defined() && input.impl()->grad_fn) stack.push_back(input.impl()->grad_fn);
    }
    nodes_.push_back(std::move(node));
  }
  std::sort(nodes_.begin(), nodes_.end(),
            [](const auto& a, const auto& b) { return a->sequence < b->sequence; });
}

std::vector<Tape::Record> Tape::records() const {
  std::vector<Record> out;
  out.reserve(nodes_.size());
  for (const auto& node : nodes_) out.push_back({node->sequence, node->op});
  return out;
}

void Tape::backward(const Tensor& seed) const {
  if (seed.shape() != root_.shape()) {
    throw ShapeError("backward seed " + shape_string(seed.shape()) + " does not match root " +
                     shape_string(root_.shape()));
  }
  NoGradGuard no_grad;
  auto accumulate_leaf = [](const Tensor& leaf, const Tensor& g) {
    auto& impl = *leaf.impl();
    if (g.shape() != impl.shape) {
      throw ShapeError("gradient shape " + shape_string(g.shape()) + " for leaf " +
                       shape_string(impl.shape));
    }
    if (!impl.grad) {
      impl.grad = std::make_shared<detail::Buffer>(convert_buffer(*g.impl()->data, leaf.dtype()));
      return;
    }
    std::visit(
        [&](auto& acc) {
          using T = typename std::decay_t<decltype(acc)>::value_type;
          auto add = g.data<T>();
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += add[i];
        },
        *impl.grad);
  };

  if (!root_.impl()->grad_fn) {
    if (root_.requires_grad()) accumulate_leaf(root_, seed);
    return;
  }

  std::unordered_map<const detail::Node*, Tensor> pending;
  pending.emplace(root_.impl()->grad_fn.get(), seed);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const detail::Node* node = it->get();
    auto found = pending.find(node);
    if (found == pending.end()) continue;
    Tensor grad_output = std::move(found->second);
    pending.erase(found);
    std::vector<Tensor> grads = node->backward(grad_output);
    if (grads.size() != node->inputs.size()) {
      throw std::logic_error(node->op + " backward returned " + std::to_string(grads.size()) +
                             " gradients for " + std::to_string(node->inputs.size()) + " inputs");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
      const Tensor& input = node->inputs[i];
      if (!grads[i].defined() || !input.requires_grad()) continue;
      if (grads[i].shape() != input.shape()) {
        throw ShapeError(node->op + " backward: gradient " + shape_string(grads[i].shape()) +
                         " for input " + shape_string(input.shape()));
      }
      check_finite(grads[i], node->op + " backward");
      if (const auto* parent = input.impl()->grad_fn.get()) {
        auto slot = pending.find(parent);
        if (slot == pending.end()) {
          pending.emplace(parent, grads[i]);
        } else {
          slot->second = sum_into_new(slot->second, grads[i]);
        }
      } else {
        accumulate_leaf(input, grads[i]);
      }
    }
  }
}

}  // namespace dvgait::numgrad
