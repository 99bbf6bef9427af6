#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dvgait/numgrad/tensor.hpp"

namespace dvgait::numgrad {

struct GradcheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  /// Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
  /// Check at most this many elements per input (0 = every element).
  std::int64_t max_elements_per_input = 0;
  std::uint64_t seed = 7;
  /// Skip elements whose left and right one-sided differences disagree by
  /// more than `tolerance` (a ReLU kink or pooling tie inside the step).
  bool skip_kinks = false;
};

struct GradcheckReport {
  bool passed = false;
  double max_rel_error = 0.0;
  std::string worst;  // "input[i] element j: analytic a vs numeric n"
  std::int64_t checked = 0;
  std::int64_t skipped = 0;
};

using GradcheckFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Compares reverse-mode gradients of `fn` against central differences.
/// 32-bit inputs are copied to 64-bit; 64-bit inputs are perturbed in place
/// (and restored), so module parameters can be passed directly. The output
/// is reduced to a scalar through fixed random projection weights so that
/// every output element matters.
GradcheckReport gradcheck(const GradcheckFn& fn, std::vector<Tensor> inputs, const GradcheckOptions& options = {});

}  // namespace dvgait::numgrad
