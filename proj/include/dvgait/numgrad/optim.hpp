#pragma once

#include <cstdint>
#include <vector>

#include "dvgait/numgrad/module.hpp"

namespace dvgait::numgrad {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are held in 64-bit regardless of the
/// parameter dtype. Parameters without a gradient are left untouched.
class Adam {
 public:
  Adam(std::vector<NamedTensor> params, AdamConfig config);

  void step();
  void zero_grad();
  std::int64_t steps() const noexcept { return step_; }
  const std::vector<NamedTensor>& params() const noexcept { return params_; }

 private:
  std::vector<NamedTensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t step_ = 0;
};

}  // namespace dvgait::numgrad
