#include <Eigen/Core>
#include <algorithm>
#include <string>

#include "dvgait/numgrad/ops.hpp"

namespace dvgait::numgrad {

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// Every sample is unfolded and multiplied on its own. The GEMM shape then
// never depends on the batch size, and neither does the summation order, so
// a sample's output is bit-identical whatever batch it travels in.
struct Geometry {
  std::int64_t channels, height, width;  // image side
  std::int64_t kernel, stride, padding;
  std::int64_t out_h, out_w;  // patch grid
};

// Unfolds one image into rows (c, ki, kj) x columns (oy, ox) of `cols`,
// starting at column `offset` of a row-major matrix with leading dimension `ld`.
template <class T>
void im2col(const T* image, const Geometry& g, T* cols, std::int64_t ld, std::int64_t offset) {
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ki = 0; ki < g.kernel; ++ki) {
      for (std::int64_t kj = 0; kj < g.kernel; ++kj) {
        T* dst = cols + ((c * g.kernel + ki) * g.kernel + kj) * ld + offset;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ki;
          T* row = dst + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(row, row + g.out_w, T(0));
            continue;
          }
          const T* src = image + (c * g.height + iy) * g.width;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kj;
            row[ox] = (ix >= 0 && ix < g.width) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates columns back into the image.
template <class T>
void col2im(const T* cols, const Geometry& g, std::int64_t ld, std::int64_t offset, T* image) {
  for (std::int64_t c = 0; c < g.channels; ++c) {
    for (std::int64_t ki = 0; ki < g.kernel; ++ki) {
      for (std::int64_t kj = 0; kj < g.kernel; ++kj) {
        const T* src = cols + ((c * g.kernel + ki) * g.kernel + kj) * ld + offset;
        for (std::int64_t oy = 0; oy < g.out_h; ++oy) {
          const std::int64_t iy = oy * g.stride - g.padding + ki;
          if (iy < 0 || iy >= g.height) continue;
          T* dst = image + (c * g.height + iy) * g.width;
          const T* row = src + oy * g.out_w;
          for (std::int64_t ox = 0; ox < g.out_w; ++ox) {
            const std::int64_t ix = ox * g.stride - g.padding + kj;
            if (ix >= 0 && ix < g.width) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

std::int64_t chunk_size(std::int64_t, std::int64_t) { return 1; }

void require(bool ok, std::string_view layer, const std::string& message) {
  if (!ok) throw ShapeError(std::string(layer) + ": " + message);
}

void check_dtypes(std::string_view layer, const Tensor& a, const Tensor& b, const Tensor& c) {
  require(a.dtype() == b.dtype() && b.dtype() == c.dtype(), layer, "mixed dtypes");
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding,
              std::string_view layer) {
  require(input.rank() == 4, layer, "input must be NCHW, got " + shape_string(input.shape()));
  require(weight.rank() == 4 && weight.dim(2) == weight.dim(3), layer,
          "weight must be [Cout, Cin, k, k], got " + shape_string(weight.shape()));
  require(input.dim(1) == weight.dim(1), layer,
          "input has " + std::to_string(input.dim(1)) + " channels, weight expects " +
              std::to_string(weight.dim(1)));
  require(bias.rank() == 1 && bias.dim(0) == weight.dim(0), layer,
          "bias " + shape_string(bias.shape()) + " does not match " + std::to_string(weight.dim(0)) +
              " filters");
  require(stride >= 1 && padding >= 0, layer, "invalid stride/padding");
  check_dtypes(layer, input, weight, bias);

  const std::int64_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::int64_t cout = weight.dim(0), k = weight.dim(2);
  require(h + 2 * padding >= k && w + 2 * padding >= k, layer,
          "kernel " + std::to_string(k) + " larger than padded input " + shape_string(input.shape()));
  const Geometry geo{cin, h, w, k, stride, padding, (h + 2 * padding - k) / stride + 1,
                     (w + 2 * padding - k) / stride + 1};
  const std::int64_t kdim = cin * k * k;
  const std::int64_t positions = geo.out_h * geo.out_w;
  const std::int64_t chunk = chunk_size(n, kdim * positions);

  Tensor out = dispatch(input.dtype(), [&]<class T>(T) {
    auto x = input.data<T>();
    auto b = bias.data<T>();
    ConstMatMap<T> wmat(weight.data<T>().data(), cout, kdim);
    std::vector<T> result(static_cast<std::size_t>(n * cout * positions));
    RowMat<T> cols(kdim, chunk * positions);
    RowMat<T> y(cout, chunk * positions);
    for (std::int64_t n0 = 0; n0 < n; n0 += chunk) {
      const std::int64_t nb = std::min(chunk, n - n0);
      const std::int64_t ld = nb * positions;
      cols.resize(kdim, ld);
      for (std::int64_t s = 0; s < nb; ++s) {
        im2col(x.data() + (n0 + s) * cin * h * w, geo, cols.data(), ld, s * positions);
      }
      y.resize(cout, ld);
      y.noalias() = wmat * cols;
      for (std::int64_t s = 0; s < nb; ++s) {
        for (std::int64_t co = 0; co < cout; ++co) {
          T* dst = result.data() + ((n0 + s) * cout + co) * positions;
          const T* src = y.data() + co * ld + s * positions;
          for (std::int64_t i = 0; i < positions; ++i) dst[i] = src[i] + b[co];
        }
      }
    }
    return Tensor::from_vector({n, cout, geo.out_h, geo.out_w}, std::move(result));
  });

  auto backward = [input, weight, bias, geo, n, cout, kdim, positions, chunk](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto x = input.data<T>();
      auto gy = g.data<T>();
      ConstMatMap<T> wmat(weight.data<T>().data(), cout, kdim);
      const bool need_x = input.requires_grad(), need_w = weight.requires_grad(),
                 need_b = bias.requires_grad();
      std::vector<T> dx(need_x ? x.size() : 0, T(0));
      RowMat<T> dw = RowMat<T>::Zero(cout, kdim);
      std::vector<T> db(cout, T(0));
      RowMat<T> cols, dy, dcols;
      const std::int64_t image = geo.channels * geo.height * geo.width;
      for (std::int64_t n0 = 0; n0 < n; n0 += chunk) {
        const std::int64_t nb = std::min(chunk, n - n0);
        const std::int64_t ld = nb * positions;
        dy.resize(cout, ld);
        for (std::int64_t s = 0; s < nb; ++s) {
          for (std::int64_t co = 0; co < cout; ++co) {
            const T* src = gy.data() + ((n0 + s) * cout + co) * positions;
            std::copy(src, src + positions, dy.data() + co * ld + s * positions);
          }
        }
        if (need_w) {
          cols.resize(kdim, ld);
          for (std::int64_t s = 0; s < nb; ++s) {
            im2col(x.data() + (n0 + s) * image, geo, cols.data(), ld, s * positions);
          }
          dw.noalias() += dy * cols.transpose();
        }
        if (need_b) {
          for (std::int64_t co = 0; co < cout; ++co) {
            const T* row = dy.data() + co * ld;
            T acc = 0;
            for (std::int64_t i = 0; i < ld; ++i) acc += row[i];
            db[co] += acc;
          }
        }
        if (need_x) {
          dcols.resize(kdim, ld);
          dcols.noalias() = wmat.transpose() * dy;
          for (std::int64_t s = 0; s < nb; ++s) {
            col2im(dcols.data(), geo, ld, s * positions, dx.data() + (n0 + s) * image);
          }
        }
      }
      std::vector<Tensor> grads(3);
      if (need_x) grads[0] = Tensor::from_vector(input.shape(), std::move(dx));
      if (need_w) {
        grads[1] = Tensor::from_vector(weight.shape(), std::vector<T>(dw.data(), dw.data() + dw.size()));
      }
      if (need_b) grads[2] = Tensor::from_vector(bias.shape(), std::move(db));
      return grads;
    });
  };
  return record(layer, std::move(out), {input, weight, bias}, std::move(backward));
}

Tensor conv_transpose2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                        int padding, int output_padding, std::string_view layer) {
  require(input.rank() == 4, layer, "input must be NCHW, got " + shape_string(input.shape()));
  require(weight.rank() == 4 && weight.dim(2) == weight.dim(3), layer,
          "weight must be [Cin, Cout, k, k], got " + shape_string(weight.shape()));
  require(input.dim(1) == weight.dim(0), layer,
          "input has " + std::to_string(input.dim(1)) + " channels, weight expects " +
              std::to_string(weight.dim(0)));
  require(bias.rank() == 1 && bias.dim(0) == weight.dim(1), layer,
          "bias " + shape_string(bias.shape()) + " does not match " + std::to_string(weight.dim(1)) +
              " output channels");
  require(stride >= 1 && padding >= 0 && output_padding >= 0 && output_padding < stride, layer,
          "invalid stride/padding/output_padding");
  check_dtypes(layer, input, weight, bias);

  const std::int64_t n = input.dim(0), cin = input.dim(1), hi = input.dim(2), wi = input.dim(3);
  const std::int64_t cout = weight.dim(1), k = weight.dim(2);
  const std::int64_t ho = (hi - 1) * stride - 2 * padding + k + output_padding;
  const std::int64_t wo = (wi - 1) * stride - 2 * padding + k + output_padding;
  require(ho > 0 && wo > 0, layer, "non-positive output extent");
  // The output plays the role of the image; the input grid is the patch grid.
  const Geometry geo{cout, ho, wo, k, stride, padding, hi, wi};
  require((ho + 2 * padding - k) / stride + 1 == hi, layer, "inconsistent transposed geometry");
  const std::int64_t kdim = cout * k * k;
  const std::int64_t positions = hi * wi;
  const std::int64_t chunk = chunk_size(n, kdim * positions);
  const std::int64_t out_image = cout * ho * wo;

  Tensor out = dispatch(input.dtype(), [&]<class T>(T) {
    auto x = input.data<T>();
    auto b = bias.data<T>();
    ConstMatMap<T> wmat(weight.data<T>().data(), cin, kdim);
    std::vector<T> result(static_cast<std::size_t>(n * out_image), T(0));
    RowMat<T> xm, cols;
    for (std::int64_t n0 = 0; n0 < n; n0 += chunk) {
      const std::int64_t nb = std::min(chunk, n - n0);
      const std::int64_t ld = nb * positions;
      xm.resize(cin, ld);
      for (std::int64_t s = 0; s < nb; ++s) {
        for (std::int64_t ci = 0; ci < cin; ++ci) {
          const T* src = x.data() + ((n0 + s) * cin + ci) * positions;
          std::copy(src, src + positions, xm.data() + ci * ld + s * positions);
        }
      }
      cols.resize(kdim, ld);
      cols.noalias() = wmat.transpose() * xm;
      for (std::int64_t s = 0; s < nb; ++s) {
        col2im(cols.data(), geo, ld, s * positions, result.data() + (n0 + s) * out_image);
      }
    }
    for (std::int64_t s = 0; s < n; ++s) {
      for (std::int64_t co = 0; co < cout; ++co) {
        T* dst = result.data() + s * out_image + co * ho * wo;
        for (std::int64_t i = 0; i < ho * wo; ++i) dst[i] += b[co];
      }
    }
    return Tensor::from_vector({n, cout, ho, wo}, std::move(result));
  });

  auto backward = [input, weight, bias, geo, n, cin, cout, kdim, positions, chunk,
                   out_image](const Tensor& g) {
    return dispatch(g.dtype(), [&]<class T>(T) {
      auto x = input.data<T>();
      auto gy = g.data<T>();
      ConstMatMap<T> wmat(weight.data<T>().data(), cin, kdim);
      const bool need_x = input.requires_grad(), need_w = weight.requires_grad(),
                 need_b = bias.requires_grad();
      std::vector<T> dx(need_x ? x.size() : 0, T(0));
      RowMat<T> dw = RowMat<T>::Zero(cin, kdim);
      std::vector<T> db(cout, T(0));
      RowMat<T> dcols, xm, dxm;
      const std::int64_t plane = geo.height * geo.width;
      if (need_b) {
        for (std::int64_t s = 0; s < n; ++s) {
          for (std::int64_t co = 0; co < cout; ++co) {
            const T* src = gy.data() + s * out_image + co * plane;
            T acc = 0;
            for (std::int64_t i = 0; i < plane; ++i) acc += src[i];
            db[co] += acc;
          }
        }
      }
      if (need_x || need_w) {
        for (std::int64_t n0 = 0; n0 < n; n0 += chunk) {
          const std::int64_t nb = std::min(chunk, n - n0);
          const std::int64_t ld = nb * positions;
          dcols.resize(kdim, ld);
          for (std::int64_t s = 0; s < nb; ++s) {
            im2col(gy.data() + (n0 + s) * out_image, geo, dcols.data(), ld, s * positions);
          }
          if (need_w) {
            xm.resize(cin, ld);
            for (std::int64_t s = 0; s < nb; ++s) {
              for (std::int64_t ci = 0; ci < cin; ++ci) {
                const T* src = x.data() + ((n0 + s) * cin + ci) * positions;
                std::copy(src, src + positions, xm.data() + ci * ld + s * positions);
              }
            }
            dw.noalias() += xm * dcols.transpose();
          }
          if (need_x) {
            dxm.resize(cin, ld);
            dxm.noalias() = wmat * dcols;
            for (std::int64_t s = 0; s < nb; ++s) {
              for (std::int64_t ci = 0; ci < cin; ++ci) {
                const T* src = dxm.data() + ci * ld + s * positions;
                std::copy(src, src + positions, dx.data() + ((n0 + s) * cin + ci) * positions);
              }
            }
          }
        }
      }
      std::vector<Tensor> grads(3);
      if (need_x) grads[0] = Tensor::from_vector(input.shape(), std::move(dx));
      if (need_w) {
        grads[1] = Tensor::from_vector(weight.shape(), std::vector<T>(dw.data(), dw.data() + dw.size()));
      }
      if (need_b) grads[2] = Tensor::from_vector(bias.shape(), std::move(db));
      return grads;
    });
  };
  return record(layer, std::move(out), {input, weight, bias}, std::move(backward));
}

}  // namespace dvgait::numgrad
