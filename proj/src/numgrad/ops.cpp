#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "dvgait/numgrad/ops.hpp"

namespace dvgait::numgrad {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

void require(bool ok, std::string_view op, const std::string& message) {
  if (!ok) throw ShapeError(std::string(op) + ": " + message);
}

void same_shape(std::string_view op, const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), op, shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  require(a.dtype() == b.dtype(), op, "mixed dtypes");
}

// f(value) elementwise, preserving dtype.
template <class F>
Tensor map_values(const Tensor& x, F f) {
  return dispatch(x.dtype(), [&]<class T>(T) {
    auto in = x.data<T>();
    std::vector<T> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<T>(f(in[i]));
    return Tensor::from_vector(x.shape(), std::move(out));
  });
}

// f(a_i, b_i) elementwise; shapes must already agree.
template <class F>
Tensor zip_values(const Tensor& a, const Tensor& b, F f) {
  return dispatch(a.dtype(), [&]<class T>(T) {
    auto x = a.data<T>();
    auto y = b.data<T>();
    std::vector<T> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<T>(f(x[i], y[i]));
    return Tensor::from_vector(a.shape(), std::move(out));
  });
}

// Elementwise op whose derivative is a function of input and output.
template <class Fwd, class Deriv>
Tensor unary(std::string_view op, const Tensor& x, Fwd fwd, Deriv deriv) {
  Tensor y = map_values(x, fwd);
  Tensor y_saved = y.detach();
  return record(op, y, {x}, [x, y_saved, deriv](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto xv = x.data<T>();
      auto yv = y_saved.data<T>();
      auto gv = g.data<T>();
      std::vector<T> dx(gv.size());
      for (std::size_t i = 0; i < gv.size(); ++i) dx[i] = gv[i] * static_cast<T>(deriv(xv[i], yv[i]));
      return std::vector<Tensor>{Tensor::from_vector(x.shape(), std::move(dx))};
    });
  });
}

// Splits [N, C, ...] into (outer N, channels C, inner prod(...)).
struct ChannelLayout {
  std::int64_t outer, channels, inner;
};

ChannelLayout channel_layout(const Tensor& x, std::string_view op) {
  require(x.rank() >= 2, op, "expects [N, C, ...], got " + shape_string(x.shape()));
  const std::int64_t inner = x.numel() / (x.dim(0) * x.dim(1));
  return {x.dim(0), x.dim(1), inner};
}

}  // namespace

// --- normalization ----------------------------------------------------------

Tensor batch_norm2d(const Tensor& input, const Tensor& gamma, const Tensor& beta, NormMode mode,
                    BatchNormStats& stats, double momentum, double epsilon, std::string_view layer) {
  require(input.rank() == 4, layer, "input must be NCHW, got " + shape_string(input.shape()));
  const std::int64_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  const Shape channel_shape{c};
  require(gamma.shape() == channel_shape && beta.shape() == channel_shape, layer,
          "affine parameters must be [" + std::to_string(c) + "]");
  require(stats.running_mean.shape() == channel_shape && stats.running_var.shape() == channel_shape, layer,
          "running statistics must be [" + std::to_string(c) + "]");
  require(input.dtype() == gamma.dtype() && gamma.dtype() == beta.dtype() &&
              stats.running_mean.dtype() == input.dtype() && stats.running_var.dtype() == input.dtype(),
          layer, "mixed dtypes");
  if (mode == NormMode::train && n < 2) {
    throw ShapeError(std::string(layer) + ": batch of 1 in train mode");
  }
  const std::int64_t count = n * plane;

  // Per-channel mean and inverse std used by this call (batch or running).
  std::vector<double> mean(c), inv_std(c);
  dispatch(input.dtype(), [&]<class T>(T) {
    auto x = input.data<T>();
    if (mode == NormMode::train) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        double sum = 0;
        for (std::int64_t s = 0; s < n; ++s) {
          const T* p = x.data() + (s * c + ch) * plane;
          for (std::int64_t i = 0; i < plane; ++i) sum += p[i];
        }
        const double mu = sum / count;
        double sq = 0;
        for (std::int64_t s = 0; s < n; ++s) {
          const T* p = x.data() + (s * c + ch) * plane;
          for (std::int64_t i = 0; i < plane; ++i) sq += (p[i] - mu) * (p[i] - mu);
        }
        mean[ch] = mu;
        inv_std[ch] = 1.0 / std::sqrt(sq / count + epsilon);
        const double unbiased = sq / (count - 1);
        auto rm = stats.running_mean.mutable_data<T>();
        auto rv = stats.running_var.mutable_data<T>();
        rm[ch] = static_cast<T>(momentum * rm[ch] + (1 - momentum) * mu);
        rv[ch] = static_cast<T>(momentum * rv[ch] + (1 - momentum) * unbiased);
      }
    } else {
      const auto rm = stats.running_mean.to_vector();
      const auto rv = stats.running_var.to_vector();
      for (std::int64_t ch = 0; ch < c; ++ch) {
        mean[ch] = rm[ch];
        inv_std[ch] = 1.0 / std::sqrt(rv[ch] + epsilon);
      }
    }
  });

  Tensor out = dispatch(input.dtype(), [&]<class T>(T) {
    auto x = input.data<T>();
    auto gm = gamma.data<T>();
    auto bt = beta.data<T>();
    std::vector<T> y(x.size());
    for (std::int64_t s = 0; s < n; ++s) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const std::int64_t base = (s * c + ch) * plane;
        const double a = gm[ch] * inv_std[ch];
        const double b = bt[ch] - a * mean[ch];
        for (std::int64_t i = 0; i < plane; ++i) y[base + i] = static_cast<T>(a * x[base + i] + b);
      }
    }
    return Tensor::from_vector(input.shape(), std::move(y));
  });

  const bool train = mode == NormMode::train;
  auto backward = [input, gamma, beta, mean, inv_std, n, c, plane, count, train](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto x = input.data<T>();
      auto gm = gamma.data<T>();
      auto gy = g.data<T>();
      std::vector<T> dx(input.requires_grad() ? x.size() : 0);
      std::vector<T> dgamma(c), dbeta(c);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        double sum_dy = 0, sum_dy_xhat = 0;
        for (std::int64_t s = 0; s < n; ++s) {
          const std::int64_t base = (s * c + ch) * plane;
          for (std::int64_t i = 0; i < plane; ++i) {
            const double xhat = (x[base + i] - mean[ch]) * inv_std[ch];
            sum_dy += gy[base + i];
            sum_dy_xhat += gy[base + i] * xhat;
          }
        }
        dgamma[ch] = static_cast<T>(sum_dy_xhat);
        dbeta[ch] = static_cast<T>(sum_dy);
        if (dx.empty()) continue;
        const double scale = gm[ch] * inv_std[ch];
        const double mean_dy = train ? sum_dy / count : 0.0;
        const double mean_dy_xhat = train ? sum_dy_xhat / count : 0.0;
        for (std::int64_t s = 0; s < n; ++s) {
          const std::int64_t base = (s * c + ch) * plane;
          for (std::int64_t i = 0; i < plane; ++i) {
            const double xhat = (x[base + i] - mean[ch]) * inv_std[ch];
            dx[base + i] = static_cast<T>(scale * (gy[base + i] - mean_dy - xhat * mean_dy_xhat));
          }
        }
      }
      std::vector<Tensor> grads(3);
      if (!dx.empty()) grads[0] = Tensor::from_vector(input.shape(), std::move(dx));
      if (gamma.requires_grad()) grads[1] = Tensor::from_vector(gamma.shape(), std::move(dgamma));
      if (beta.requires_grad()) grads[2] = Tensor::from_vector(beta.shape(), std::move(dbeta));
      return grads;
    });
  };
  return record(layer, std::move(out), {input, gamma, beta}, std::move(backward));
}

// --- activations ------------------------------------------------------------

Tensor leaky_relu(const Tensor& x, double slope) {
  return unary(
      "leaky_relu", x, [slope](auto v) { return v > 0 ? v : v * slope; },
      [slope](auto v, auto) { return v > 0 ? 1.0 : slope; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](auto v) { return v > 0 ? v : decltype(v)(0); },
      [](auto v, auto) { return v > 0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](auto v) { return std::tanh(v); },
      [](auto, auto y) { return 1.0 - static_cast<double>(y) * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](auto v) {
        using T = decltype(v);
        if (v >= 0) return T(1) / (T(1) + std::exp(-v));
        const T e = std::exp(v);
        return e / (T(1) + e);
      },
      [](auto, auto y) { return static_cast<double>(y) * (1.0 - y); });
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  const auto layout = channel_layout(x, "prelu");
  require(slope.shape() == Shape{layout.channels}, "prelu",
          "slope must be [" + std::to_string(layout.channels) + "], got " + shape_string(slope.shape()));
  require(x.dtype() == slope.dtype(), "prelu", "mixed dtypes");
  Tensor out = dispatch(x.dtype(), [&]<class T>(T) {
    auto xv = x.data<T>();
    auto a = slope.data<T>();
    std::vector<T> y(xv.size());
    for (std::int64_t s = 0; s < layout.outer; ++s) {
      for (std::int64_t ch = 0; ch < layout.channels; ++ch) {
        const std::int64_t base = (s * layout.channels + ch) * layout.inner;
        for (std::int64_t i = 0; i < layout.inner; ++i) {
          const T v = xv[base + i];
          y[base + i] = v > 0 ? v : a[ch] * v;
        }
      }
    }
    return Tensor::from_vector(x.shape(), std::move(y));
  });
  return record("prelu", std::move(out), {x, slope}, [x, slope, layout](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto xv = x.data<T>();
      auto a = slope.data<T>();
      auto gv = g.data<T>();
      std::vector<T> dx(xv.size()), da(layout.channels, T(0));
      for (std::int64_t s = 0; s < layout.outer; ++s) {
        for (std::int64_t ch = 0; ch < layout.channels; ++ch) {
          const std::int64_t base = (s * layout.channels + ch) * layout.inner;
          T acc = 0;
          for (std::int64_t i = 0; i < layout.inner; ++i) {
            const T v = xv[base + i];
            if (v > 0) {
              dx[base + i] = gv[base + i];
            } else {
              dx[base + i] = a[ch] * gv[base + i];
              acc += v * gv[base + i];
            }
          }
          da[ch] += acc;
        }
      }
      std::vector<Tensor> grads(2);
      if (x.requires_grad()) grads[0] = Tensor::from_vector(x.shape(), std::move(dx));
      if (slope.requires_grad()) grads[1] = Tensor::from_vector(slope.shape(), std::move(da));
      return grads;
    });
  });
}

// --- elementwise arithmetic -------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape("add", a, b);
  Tensor out = zip_values(a, b, [](auto u, auto v) { return u + v; });
  return record("add", std::move(out), {a, b}, [](const Tensor& g) { return std::vector<Tensor>{g, g}; });
}

Tensor affine(const Tensor& x, double factor, double offset) {
  Tensor out = map_values(x, [&](auto v) { return factor * v + offset; });
  return record("affine", std::move(out), {x}, [factor](const Tensor& g) {
    return std::vector<Tensor>{map_values(g, [&](auto v) { return factor * v; })};
  });
}

Tensor scale(const Tensor& x, double factor) { return affine(x, factor, 0.0); }

Tensor lerp(const Tensor& a, const Tensor& b, double alpha) {
  same_shape("lerp", a, b);
  // Endpoints are returned exactly, not through floating-point blending.
  Tensor out = zip_values(a, b, [alpha](auto u, auto v) {
    using T = decltype(u);
    if (alpha == 1.0) return u;
    if (alpha == 0.0) return v;
    return static_cast<T>(alpha * u + (1.0 - alpha) * v);
  });
  return record("lerp", std::move(out), {a, b}, [alpha](const Tensor& g) {
    return std::vector<Tensor>{map_values(g, [&](auto v) { return alpha * v; }),
                               map_values(g, [&](auto v) { return (1.0 - alpha) * v; })};
  });
}

// --- structure --------------------------------------------------------------

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const auto la = channel_layout(a, "concat_channels");
  const auto lb = channel_layout(b, "concat_channels");
  require(a.rank() == b.rank() && la.outer == lb.outer && la.inner == lb.inner &&
              std::equal(a.shape().begin() + 2, a.shape().end(), b.shape().begin() + 2),
          "concat_channels", shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  require(a.dtype() == b.dtype(), "concat_channels", "mixed dtypes");
  Shape shape = a.shape();
  shape[1] = la.channels + lb.channels;
  const std::int64_t sa = la.channels * la.inner, sb = lb.channels * lb.inner;
  Tensor out = dispatch(a.dtype(), [&]<class T>(T) {
    auto x = a.data<T>();
    auto y = b.data<T>();
    std::vector<T> v;
    v.reserve(x.size() + y.size());
    for (std::int64_t s = 0; s < la.outer; ++s) {
      v.insert(v.end(), x.begin() + s * sa, x.begin() + (s + 1) * sa);
      v.insert(v.end(), y.begin() + s * sb, y.begin() + (s + 1) * sb);
    }
    return Tensor::from_vector(shape, std::move(v));
  });
  return record("concat_channels", std::move(out), {a, b}, [a, b, la, sa, sb](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto gv = g.data<T>();
      std::vector<T> ga, gb;
      ga.reserve(la.outer * sa);
      gb.reserve(la.outer * sb);
      for (std::int64_t s = 0; s < la.outer; ++s) {
        auto base = gv.begin() + s * (sa + sb);
        ga.insert(ga.end(), base, base + sa);
        gb.insert(gb.end(), base + sa, base + sa + sb);
      }
      return std::vector<Tensor>{Tensor::from_vector(a.shape(), std::move(ga)),
                                 Tensor::from_vector(b.shape(), std::move(gb))};
    });
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(), "reshape",
          shape_string(x.shape()) + " cannot become " + shape_string(shape));
  Tensor out = dispatch(x.dtype(), [&]<class T>(T) {
    auto v = x.data<T>();
    return Tensor::from_vector(shape, std::vector<T>(v.begin(), v.end()));
  });
  return record("reshape", std::move(out), {x}, [x](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto v = g.data<T>();
      return std::vector<Tensor>{Tensor::from_vector(x.shape(), std::vector<T>(v.begin(), v.end()))};
    });
  });
}

Tensor flatten(const Tensor& x) {
  require(x.rank() >= 1, "flatten", "needs a batch axis");
  return reshape(x, {x.dim(0), x.numel() / x.dim(0)});
}

Tensor slice_batch(const Tensor& x, std::int64_t begin, std::int64_t end) {
  require(x.rank() >= 1 && 0 <= begin && begin < end && end <= x.dim(0), "slice_batch",
          "range [" + std::to_string(begin) + "," + std::to_string(end) + ") on " + shape_string(x.shape()));
  const std::int64_t stride = x.numel() / x.dim(0);
  Shape shape = x.shape();
  shape[0] = end - begin;
  Tensor out = dispatch(x.dtype(), [&]<class T>(T) {
    auto v = x.data<T>();
    return Tensor::from_vector(shape, std::vector<T>(v.begin() + begin * stride, v.begin() + end * stride));
  });
  return record("slice_batch", std::move(out), {x}, [x, begin, stride](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      std::vector<T> dx(x.numel(), T(0));
      auto gv = g.data<T>();
      std::copy(gv.begin(), gv.end(), dx.begin() + begin * stride);
      return std::vector<Tensor>{Tensor::from_vector(x.shape(), std::move(dx))};
    });
  });
}

Tensor concat_batch(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_batch", "no inputs");
  const Tensor& first = parts.front();
  require(first.rank() >= 1, "concat_batch", "needs a batch axis");
  Shape shape = first.shape();
  shape[0] = 0;
  for (const auto& p : parts) {
    require(p.rank() == first.rank() && std::equal(p.shape().begin() + 1, p.shape().end(), first.shape().begin() + 1),
            "concat_batch", shape_string(p.shape()) + " vs " + shape_string(first.shape()));
    require(p.dtype() == first.dtype(), "concat_batch", "mixed dtypes");
    shape[0] += p.dim(0);
  }
  Tensor out = dispatch(first.dtype(), [&]<class T>(T) {
    std::vector<T> v;
    v.reserve(shape_numel(shape));
    for (const auto& p : parts) {
      auto d = p.data<T>();
      v.insert(v.end(), d.begin(), d.end());
    }
    return Tensor::from_vector(shape, std::move(v));
  });
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  std::vector<Shape> shapes;
  for (const auto& p : parts) shapes.push_back(p.shape());
  return record("concat_batch", std::move(out), std::move(inputs), [shapes](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto gv = g.data<T>();
      std::vector<Tensor> grads;
      std::size_t offset = 0;
      for (const auto& s : shapes) {
        const auto n = static_cast<std::size_t>(shape_numel(s));
        grads.push_back(Tensor::from_vector(s, std::vector<T>(gv.begin() + offset, gv.begin() + offset + n)));
        offset += n;
      }
      return grads;
    });
  });
}

// --- pooling / dense --------------------------------------------------------

Tensor max_pool2x2(const Tensor& x) {
  require(x.rank() == 4, "max_pool2x2", "input must be NCHW, got " + shape_string(x.shape()));
  const std::int64_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  require(h >= 2 && w >= 2, "max_pool2x2", "input smaller than the window: " + shape_string(x.shape()));
  const std::int64_t ho = h / 2, wo = w / 2;
  auto argmax = std::make_shared<std::vector<std::int64_t>>(planes * ho * wo);
  Tensor out = dispatch(x.dtype(), [&]<class T>(T) {
    auto v = x.data<T>();
    std::vector<T> y(planes * ho * wo);
    for (std::int64_t p = 0; p < planes; ++p) {
      for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          std::int64_t best = (p * h + 2 * oy) * w + 2 * ox;
          for (std::int64_t dy = 0; dy < 2; ++dy) {
            for (std::int64_t dx = 0; dx < 2; ++dx) {
              const std::int64_t idx = (p * h + 2 * oy + dy) * w + 2 * ox + dx;
              if (v[idx] > v[best]) best = idx;
            }
          }
          const std::int64_t o = (p * ho + oy) * wo + ox;
          y[o] = v[best];
          (*argmax)[o] = best;
        }
      }
    }
    return Tensor::from_vector({x.dim(0), x.dim(1), ho, wo}, std::move(y));
  });
  return record("max_pool2x2", std::move(out), {x}, [x, argmax](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto gv = g.data<T>();
      std::vector<T> dx(x.numel(), T(0));
      for (std::size_t o = 0; o < gv.size(); ++o) dx[(*argmax)[o]] += gv[o];
      return std::vector<Tensor>{Tensor::from_vector(x.shape(), std::move(dx))};
    });
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require(x.rank() == 4, "global_avg_pool", "input must be NCHW, got " + shape_string(x.shape()));
  const std::int64_t planes = x.dim(0) * x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor out = dispatch(x.dtype(), [&]<class T>(T) {
    auto v = x.data<T>();
    std::vector<T> y(planes);
    for (std::int64_t p = 0; p < planes; ++p) {
      double acc = 0;
      for (std::int64_t i = 0; i < plane; ++i) acc += v[p * plane + i];
      y[p] = static_cast<T>(acc / plane);
    }
    return Tensor::from_vector({x.dim(0), x.dim(1)}, std::move(y));
  });
  return record("global_avg_pool", std::move(out), {x}, [x, plane](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto gv = g.data<T>();
      std::vector<T> dx(x.numel());
      for (std::size_t p = 0; p < gv.size(); ++p) {
        std::fill(dx.begin() + p * plane, dx.begin() + (p + 1) * plane, static_cast<T>(gv[p] / plane));
      }
      return std::vector<Tensor>{Tensor::from_vector(x.shape(), std::move(dx))};
    });
  });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias, std::string_view layer) {
  require(x.rank() == 2, layer, "input must be [N, in], got " + shape_string(x.shape()));
  require(weight.rank() == 2 && weight.dim(1) == x.dim(1), layer,
          "weight " + shape_string(weight.shape()) + " does not accept " + std::to_string(x.dim(1)) +
              " features");
  require(bias.shape() == Shape{weight.dim(0)}, layer, "bias must be [" + std::to_string(weight.dim(0)) + "]");
  require(x.dtype() == weight.dtype() && weight.dtype() == bias.dtype(), layer, "mixed dtypes");
  const std::int64_t n = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  Tensor out = dispatch(x.dtype(), [&]<class T>(T) {
    ConstMatMap<T> xm(x.data<T>().data(), n, in);
    ConstMatMap<T> wm(weight.data<T>().data(), out_dim, in);
    auto b = bias.data<T>();
    RowMat<T> y(n, out_dim);
    // Row by row, so a sample's result does not depend on its batch.
    for (std::int64_t r = 0; r < n; ++r) {
      y.row(r).noalias() = (wm * xm.row(r).transpose()).transpose();
      for (std::int64_t c = 0; c < out_dim; ++c) y(r, c) += b[c];
    }
    return Tensor::from_vector({n, out_dim}, std::vector<T>(y.data(), y.data() + y.size()));
  });
  return record(layer, std::move(out), {x, weight, bias}, [x, weight, bias, n, in, out_dim](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      ConstMatMap<T> xm(x.data<T>().data(), n, in);
      ConstMatMap<T> wm(weight.data<T>().data(), out_dim, in);
      ConstMatMap<T> gm(g.data<T>().data(), n, out_dim);
      std::vector<Tensor> grads(3);
      if (x.requires_grad()) {
        RowMat<T> dx = gm * wm;
        grads[0] = Tensor::from_vector(x.shape(), std::vector<T>(dx.data(), dx.data() + dx.size()));
      }
      if (weight.requires_grad()) {
        RowMat<T> dw = gm.transpose() * xm;
        grads[1] = Tensor::from_vector(weight.shape(), std::vector<T>(dw.data(), dw.data() + dw.size()));
      }
      if (bias.requires_grad()) {
        std::vector<T> db(out_dim, T(0));
        for (std::int64_t r = 0; r < n; ++r) {
          for (std::int64_t c = 0; c < out_dim; ++c) db[c] += gm(r, c);
        }
        grads[2] = Tensor::from_vector(bias.shape(), std::move(db));
      }
      return grads;
    });
  });
}

}  // namespace dvgait::numgrad
