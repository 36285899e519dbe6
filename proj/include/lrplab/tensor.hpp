#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"

namespace lrplab {

inline std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

// Dense row-major tensor. The pipeline instantiates float; tests and
// numeric oracles instantiate double.
template <typename T>
class TensorT {
 public:
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;

  explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
    data.assign(checked_numel(shape), T(0));
  }

  TensorT(std::vector<int> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != checked_numel(shape))
      throw DimensionError("tensor data size " + std::to_string(data.size()) +
                           " does not match shape " + shape_string(shape));
  }

  static TensorT full(std::vector<int> s, T value) {
    TensorT t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
  }

  int rank() const { return static_cast<int>(shape.size()); }

  int dim(int i) const {
    if (i < 0 || i >= rank())
      throw DimensionError("dim index " + std::to_string(i) +
                           " out of range for shape " + shape_string(shape));
    return shape[static_cast<std::size_t>(i)];
  }

  std::size_t numel() const { return data.size(); }

  std::size_t index(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != rank())
      throw DimensionError("index rank " + std::to_string(idx.size()) +
                           " does not match shape " + shape_string(shape));
    std::size_t flat = 0;
    int d = 0;
    for (int i : idx) {
      int extent = shape[static_cast<std::size_t>(d)];
      if (i < 0 || i >= extent)
        throw DimensionError("index " + std::to_string(i) + " out of range [0," +
                             std::to_string(extent) + ") in dim " +
                             std::to_string(d));
      flat = flat * static_cast<std::size_t>(extent) + static_cast<std::size_t>(i);
      ++d;
    }
    return flat;
  }

  T& at(std::initializer_list<int> idx) { return data[index(idx)]; }
  const T& at(std::initializer_list<int> idx) const { return data[index(idx)]; }

  // Same data, new shape; element count must match.
  TensorT reshaped(std::vector<int> s) const {
    if (checked_numel(s) != data.size())
      throw DimensionError("reshape from " + shape_string(shape) + " to " +
                           shape_string(s) + " changes element count");
    return TensorT(std::move(s), data);
  }

  bool same_shape(const TensorT& other) const { return shape == other.shape; }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  TensorT<U> cast() const {
    std::vector<U> d(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) d[i] = static_cast<U>(data[i]);
    return TensorT<U>(shape, std::move(d));
  }

 private:
  static std::size_t checked_numel(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int e : s) {
      if (e <= 0)
        throw DimensionError("non-positive extent in shape " + shape_string(s));
      n *= static_cast<std::size_t>(e);
    }
    return n;
  }
};

using Tensor = TensorT<float>;

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b,
                        const char* what) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(what) + ": shapes " + shape_string(a.shape) +
                         " and " + shape_string(b.shape) + " differ");
}

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "add");
  TensorT<T> out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "sub");
  TensorT<T> out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "mul");
  TensorT<T> out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T c) {
  TensorT<T> out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * c;
  return out;
}

template <typename T>
TensorT<T> relu(const TensorT<T>& a) {
  TensorT<T> out(a.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    out.data[i] = a.data[i] > T(0) ? a.data[i] : T(0);
  return out;
}

template <typename T>
using EigenRowMajor =
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// [m,k] x [k,n] -> [m,n]. Delegates the inner product to Eigen.
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2)
    throw DimensionError("matmul needs rank-2 operands, got " +
                         shape_string(a.shape) + " and " + shape_string(b.shape));
  if (a.shape[1] != b.shape[0])
    throw DimensionError("matmul inner dims differ: " + shape_string(a.shape) +
                         " x " + shape_string(b.shape));
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  TensorT<T> out({m, n});
  Eigen::Map<const EigenRowMajor<T>> ma(a.data.data(), m, k);
  Eigen::Map<const EigenRowMajor<T>> mb(b.data.data(), k, n);
  Eigen::Map<EigenRowMajor<T>> mo(out.data.data(), m, n);
  mo.noalias() = ma * mb;
  return out;
}

template <typename T>
TensorT<T> transpose(const TensorT<T>& a) {
  if (a.rank() != 2) throw DimensionError("transpose needs a rank-2 tensor");
  TensorT<T> out({a.shape[1], a.shape[0]});
  for (int i = 0; i < a.shape[0]; ++i)
    for (int j = 0; j < a.shape[1]; ++j)
      out.data[static_cast<std::size_t>(j) * a.shape[0] + i] =
          a.data[static_cast<std::size_t>(i) * a.shape[1] + j];
  return out;
}

inline int conv_out_extent(int in, int k, int stride, int pad) {
  if (k <= 0 || stride <= 0 || pad < 0)
    throw ArgumentError("conv window needs k > 0, stride > 0, pad >= 0");
  int span = in + 2 * pad - k;
  if (span < 0)
    throw DimensionError("window of size " + std::to_string(k) +
                         " does not fit input extent " + std::to_string(in) +
                         " with pad " + std::to_string(pad));
  return span / stride + 1;
}

// Unfolds [C,H,W] into a [C*kh*kw, OH*OW] patch matrix (zeros where the
// window hangs over the padded border).
template <typename T>
TensorT<T> im2col(const TensorT<T>& input, int kh, int kw, int stride, int pad) {
  if (input.rank() != 3)
    throw DimensionError("im2col needs [C,H,W], got " + shape_string(input.shape));
  const int c = input.shape[0], h = input.shape[1], w = input.shape[2];
  const int oh = conv_out_extent(h, kh, stride, pad);
  const int ow = conv_out_extent(w, kw, stride, pad);
  TensorT<T> cols({c * kh * kw, oh * ow});
  const T* src = input.data.data();
  T* dst = cols.data.data();
  const std::size_t ncols = static_cast<std::size_t>(oh) * ow;
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        std::size_t row = (static_cast<std::size_t>(ci) * kh + ky) * kw + kx;
        T* out_row = dst + row * ncols;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < ow; ++ox) out_row[oy * ow + ox] = T(0);
            continue;
          }
          const T* in_row = src + (static_cast<std::size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride - pad + kx;
            out_row[oy * ow + ox] = (ix < 0 || ix >= w) ? T(0) : in_row[ix];
          }
        }
      }
    }
  }
  return cols;
}

// Transpose of im2col as a linear map: scatter-adds a patch matrix back
// onto the [C,H,W] grid. Used for conv input gradients and relevance flow.
template <typename T>
TensorT<T> col2im(const TensorT<T>& cols, const std::vector<int>& input_shape,
                  int kh, int kw, int stride, int pad) {
  if (input_shape.size() != 3)
    throw DimensionError("col2im needs a [C,H,W] target shape");
  const int c = input_shape[0], h = input_shape[1], w = input_shape[2];
  const int oh = conv_out_extent(h, kh, stride, pad);
  const int ow = conv_out_extent(w, kw, stride, pad);
  if (cols.rank() != 2 || cols.shape[0] != c * kh * kw ||
      cols.shape[1] != oh * ow)
    throw DimensionError("col2im: patch matrix " + shape_string(cols.shape) +
                         " does not match target " + shape_string(input_shape));
  TensorT<T> out(input_shape);
  const T* src = cols.data.data();
  T* dst = out.data.data();
  const std::size_t ncols = static_cast<std::size_t>(oh) * ow;
  for (int ci = 0; ci < c; ++ci) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        std::size_t row = (static_cast<std::size_t>(ci) * kh + ky) * kw + kx;
        const T* in_row = src + row * ncols;
        for (int oy = 0; oy < oh; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          T* out_row = dst + (static_cast<std::size_t>(ci) * h + iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) out_row[ix] += in_row[oy * ow + ox];
          }
        }
      }
    }
  }
  return out;
}

// 2-d convolution (cross-correlation, the CNN convention).
// input [C,H,W], kernels [O,C,kh,kw], bias [O] or empty -> [O,OH,OW].
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& kernels,
                  const TensorT<T>& bias, int stride, int pad) {
  if (input.rank() != 3)
    throw DimensionError("conv2d input must be [C,H,W], got " +
                         shape_string(input.shape));
  if (kernels.rank() != 4)
    throw DimensionError("conv2d kernels must be [O,C,kh,kw], got " +
                         shape_string(kernels.shape));
  if (kernels.shape[1] != input.shape[0])
    throw DimensionError("conv2d channel mismatch: input " +
                         shape_string(input.shape) + ", kernels " +
                         shape_string(kernels.shape));
  const int o = kernels.shape[0];
  const int kh = kernels.shape[2], kw = kernels.shape[3];
  const bool has_bias = !bias.data.empty();
  if (has_bias && !(bias.rank() == 1 && bias.shape[0] == o))
    throw DimensionError("conv2d bias must be [O]");
  const int oh = conv_out_extent(input.shape[1], kh, stride, pad);
  const int ow = conv_out_extent(input.shape[2], kw, stride, pad);

  TensorT<T> cols = im2col(input, kh, kw, stride, pad);
  TensorT<T> kmat = kernels.reshaped({o, kernels.shape[1] * kh * kw});
  TensorT<T> out_mat = matmul(kmat, cols);
  if (has_bias) {
    for (int oc = 0; oc < o; ++oc) {
      T b = bias.data[static_cast<std::size_t>(oc)];
      T* row = out_mat.data.data() + static_cast<std::size_t>(oc) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) row[i] += b;
    }
  }
  return out_mat.reshaped({o, oh, ow});
}

template <typename T>
struct MaxPoolResult {
  TensorT<T> output;             // [C,OH,OW]
  std::vector<std::int32_t> argmax;  // winner's flat index into the input, per output cell
};

// Max pooling with recorded winners. Ties go to the first element in
// row-major scan order, so replay through the indices is deterministic.
template <typename T>
MaxPoolResult<T> maxpool2d(const TensorT<T>& input, int size, int stride) {
  if (input.rank() != 3)
    throw DimensionError("maxpool2d input must be [C,H,W], got " +
                         shape_string(input.shape));
  const int c = input.shape[0], h = input.shape[1], w = input.shape[2];
  const int oh = conv_out_extent(h, size, stride, 0);
  const int ow = conv_out_extent(w, size, stride, 0);
  MaxPoolResult<T> res{TensorT<T>({c, oh, ow}), {}};
  res.argmax.resize(static_cast<std::size_t>(c) * oh * ow);
  const T* src = input.data.data();
  std::size_t out_i = 0;
  for (int ci = 0; ci < c; ++ci) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox, ++out_i) {
        int y0 = oy * stride, x0 = ox * stride;
        T best = src[(static_cast<std::size_t>(ci) * h + y0) * w + x0];
        std::int32_t best_i =
            static_cast<std::int32_t>((static_cast<std::size_t>(ci) * h + y0) * w + x0);
        for (int dy = 0; dy < size; ++dy) {
          for (int dx = 0; dx < size; ++dx) {
            std::size_t flat =
                (static_cast<std::size_t>(ci) * h + y0 + dy) * w + (x0 + dx);
            if (src[flat] > best) {
              best = src[flat];
              best_i = static_cast<std::int32_t>(flat);
            }
          }
        }
        res.output.data[out_i] = best;
        res.argmax[out_i] = best_i;
      }
    }
  }
  return res;
}

// Bilinear resize with align-corners sampling: corner pixels of the output
// land exactly on corner pixels of the input.
template <typename T>
TensorT<T> bilinear_resize(const TensorT<T>& input, int out_h, int out_w) {
  if (input.rank() != 3)
    throw DimensionError("bilinear_resize input must be [C,H,W], got " +
                         shape_string(input.shape));
  if (out_h <= 0 || out_w <= 0)
    throw ArgumentError("bilinear_resize needs positive output extents");
  const int c = input.shape[0], h = input.shape[1], w = input.shape[2];
  TensorT<T> out({c, out_h, out_w});
  const double sy = out_h > 1 ? double(h - 1) / double(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? double(w - 1) / double(out_w - 1) : 0.0;
  for (int ci = 0; ci < c; ++ci) {
    const T* src = input.data.data() + static_cast<std::size_t>(ci) * h * w;
    T* dst = out.data.data() + static_cast<std::size_t>(ci) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      double fy = oy * sy;
      int y0 = static_cast<int>(fy);
      if (y0 > h - 2) y0 = h >= 2 ? h - 2 : 0;
      double wy = h >= 2 ? fy - y0 : 0.0;
      for (int ox = 0; ox < out_w; ++ox) {
        double fx = ox * sx;
        int x0 = static_cast<int>(fx);
        if (x0 > w - 2) x0 = w >= 2 ? w - 2 : 0;
        double wx = w >= 2 ? fx - x0 : 0.0;
        int x1 = w >= 2 ? x0 + 1 : x0;
        int y1 = h >= 2 ? y0 + 1 : y0;
        double v00 = src[y0 * w + x0], v01 = src[y0 * w + x1];
        double v10 = src[y1 * w + x0], v11 = src[y1 * w + x1];
        double top = v00 + (v01 - v00) * wx;
        double bot = v10 + (v11 - v10) * wx;
        dst[oy * out_w + ox] = static_cast<T>(top + (bot - top) * wy);
      }
    }
  }
  return out;
}

}  // namespace lrplab
