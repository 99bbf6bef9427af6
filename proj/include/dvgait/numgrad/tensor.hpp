#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace dvgait::numgrad {

enum class DType : std::uint8_t { f32, f64 };

std::string_view dtype_name(DType dtype);

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Raised when operand extents do not fit an operation's contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation would emit a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
using Buffer = std::variant<std::vector<float>, std::vector<double>>;
struct Node;
struct TensorImpl;
}  // namespace detail

/// Dense row-major array with optional participation in reverse-mode
/// differentiation. Copies are cheap handles sharing the same storage.
///
/// Values produced by operations are treated as immutable; only leaves
/// (parameters, running statistics) are mutated in place.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, DType dtype = DType::f32);
  static Tensor full(Shape shape, double value, DType dtype = DType::f32);
  static Tensor from_vector(Shape shape, std::vector<float> values);
  static Tensor from_vector(Shape shape, std::vector<double> values);
  /// Converts `values` to `dtype`.
  static Tensor from_values(Shape shape, std::span<const double> values, DType dtype);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::int64_t dim(std::size_t axis) const;
  std::size_t rank() const;
  std::int64_t numel() const;
  DType dtype() const;

  template <class T>
  std::span<const T> data() const;
  template <class T>
  std::span<T> mutable_data();

  std::vector<double> to_vector() const;
  double item() const;
  double at(std::int64_t flat_index) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const;
  /// Accumulated gradient of a leaf; undefined until a backward pass reaches it.
  Tensor grad() const;
  void zero_grad();
  /// Reverse-mode pass from a scalar.
  void backward() const;

  Tensor detach() const;
  Tensor to(DType dtype) const;
  /// Converts storage (and any accumulated gradient) in place.
  void convert_(DType dtype);
  Tensor clone() const;
  /// Copies values from `other` (same shape) into this leaf's storage.
  void assign_(const Tensor& other);

  const std::shared_ptr<detail::TensorImpl>& impl() const noexcept { return impl_; }
  static Tensor wrap(std::shared_ptr<detail::TensorImpl> impl);

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

namespace detail {

struct TensorImpl {
  Shape shape;
  std::shared_ptr<Buffer> data;
  std::shared_ptr<Buffer> grad;
  bool requires_grad = false;
  std::shared_ptr<Node> grad_fn;
};

}  // namespace detail

/// Receives the gradient of an op's output and returns one gradient per
/// input (undefined tensors for inputs that need none).
using BackwardFn = std::function<std::vector<Tensor>(const Tensor& grad_output)>;

/// Registers `value` as the output of a differentiable operation. Every op in
/// this library funnels through here, which also rejects non-finite results.
Tensor record(std::string_view op, Tensor value, std::vector<Tensor> inputs, BackwardFn backward);

bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// The ordered record of operations that produced a root tensor. Backward
/// visits the records in exact reverse execution order.
class Tape {
 public:
  struct Record {
    std::uint64_t sequence;
    std::string op;
  };

  explicit Tape(const Tensor& root);

  std::vector<Record> records() const;
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Propagates `seed` (shaped like the root) to every reachable leaf.
  void backward(const Tensor& seed) const;

 private:
  Tensor root_;
  std::vector<std::shared_ptr<detail::Node>> nodes_;
};

template <class F>
decltype(auto) dispatch(DType dtype, F&& f) {
  if (dtype == DType::f32) return std::forward<F>(f)(float{});
  return std::forward<F>(f)(double{});
}

template <class T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) {
    return DType::f32;
  } else {
    static_assert(std::is_same_v<T, double>, "numgrad stores f32 or f64 only");
    return DType::f64;
  }
}

}  // namespace dvgait::numgrad
