#include "dvgait/numgrad/optim.hpp"

#include <cmath>

namespace dvgait::numgrad {

Adam::Adam(std::vector<NamedTensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& [_, t] : params_) {
    m_.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(t.numel()), 0.0);
  }
}

void Adam::step() {
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    Tensor& t = params_[p].second;
    const Tensor g = t.grad();
    if (!g.defined()) continue;
    auto& m = m_[p];
    auto& v = v_[p];
    dispatch(t.dtype(), [&]<class T>(T) {
      auto values = t.mutable_data<T>();
      auto grads = g.data<T>();
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double gi = grads[i];
        m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
        v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
        const double update = config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
        values[i] = static_cast<T>(values[i] - update);
      }
    });
  }
}

void Adam::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

}  // namespace dvgait::numgrad
