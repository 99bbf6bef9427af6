#include "dvgait/numgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dvgait/numgrad/random.hpp"

namespace dvgait::numgrad {

namespace {

double project(const Tensor& out, const std::vector<double>& weights) {
  auto v = out.data<double>();
  double acc = 0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += weights[i] * v[i];
  return acc;
}

}  // namespace

GradcheckReport gradcheck(const GradcheckFn& fn, std::vector<Tensor> inputs, const GradcheckOptions& options) {
  for (auto& t : inputs) {
    if (t.dtype() != DType::f64) t = t.to(DType::f64);
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Rng rng(options.seed);
  Tensor out = fn(inputs);
  if (out.dtype() != DType::f64) throw std::logic_error("gradcheck: function left 64-bit precision");
  std::vector<double> weights(static_cast<std::size_t>(out.numel()));
  for (auto& w : weights) w = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double centre = project(out, weights);
  Tape(out).backward(Tensor::from_vector(out.shape(), weights));

  GradcheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor& x = inputs[k];
    const Tensor analytic = x.grad();
    std::vector<std::int64_t> indices(static_cast<std::size_t>(x.numel()));
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_elements_per_input > 0 && x.numel() > options.max_elements_per_input) {
      rng.shuffle(indices);
      indices.resize(options.max_elements_per_input);
      std::sort(indices.begin(), indices.end());
    }
    for (auto j : indices) {
      auto values = x.mutable_data<double>();
      const double saved = values[j];
      double plus, minus;
      {
        NoGradGuard guard;
        values[j] = saved + options.step;
        plus = project(fn(inputs), weights);
        values[j] = saved - options.step;
        minus = project(fn(inputs), weights);
        values[j] = saved;
      }
      const double numeric = (plus - minus) / (2 * options.step);
      const double a = analytic.defined() ? analytic.at(j) : 0.0;
      if (options.skip_kinks) {
        const double left = (centre - minus) / options.step, right = (plus - centre) / options.step;
        if (std::abs(left - right) / std::max({std::abs(left), std::abs(right), options.floor}) > options.tolerance) {
          ++report.skipped;
          continue;
        }
      }
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
      ++report.checked;
      if (rel >= report.max_rel_error) {
        report.max_rel_error = rel;
        std::ostringstream msg;
        msg.precision(10);
        msg << "input[" << k << "] element " << j << ": analytic " << a << " vs numeric " << numeric;
        report.worst = msg.str();
      }
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace dvgait::numgrad
