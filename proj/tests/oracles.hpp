#pragma once

// Slow reference implementations used only by tests. Everything here is
// written as plain nested loops with double accumulation so the fast
// library paths can be checked against an independently derived value.

#include <cmath>
#include <optional>
#include <vector>

#include "lrplab/tensor.hpp"

namespace oracle {

template <typename T>
lrplab::TensorT<T> matmul(const lrplab::TensorT<T>& a, const lrplab::TensorT<T>& b) {
  const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
  lrplab::TensorT<T> out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t)
        acc += double(a.data[i * k + t]) * double(b.data[t * n + j]);
      out.data[i * n + j] = T(acc);
    }
  }
  return out;
}

template <typename T>
lrplab::TensorT<T> conv2d(const lrplab::TensorT<T>& input,
                          const lrplab::TensorT<T>& kernels,
                          const lrplab::TensorT<T>& bias, int stride, int pad) {
  const int c = input.shape[0], h = input.shape[1], w = input.shape[2];
  const int o = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  lrplab::TensorT<T> out({o, oh, ow});
  for (int oc = 0; oc < o; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias.data.empty() ? 0.0 : double(bias.data[oc]);
        for (int ic = 0; ic < c; ++ic) {
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              int iy = oy * stride - pad + ky;
              int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += double(input.data[(ic * h + iy) * w + ix]) *
                     double(kernels.data[((oc * c + ic) * kh + ky) * kw + kx]);
            }
          }
        }
        out.data[(oc * oh + oy) * ow + ox] = T(acc);
      }
    }
  }
  return out;
}

template <typename T>
lrplab::TensorT<T> maxpool2d(const lrplab::TensorT<T>& input, int size, int stride) {
  const int c = input.shape[0], h = input.shape[1], w = input.shape[2];
  const int oh = (h - size) / stride + 1;
  const int ow = (w - size) / stride + 1;
  lrplab::TensorT<T> out({c, oh, ow});
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        T best = input.data[(ci * h + oy * stride) * w + ox * stride];
        for (int dy = 0; dy < size; ++dy)
          for (int dx = 0; dx < size; ++dx) {
            T v = input.data[(ci * h + oy * stride + dy) * w + ox * stride + dx];
            if (v > best) best = v;
          }
        out.data[(ci * oh + oy) * ow + ox] = best;
      }
  return out;
}

// Brute-force relevance redistribution through one dense layer with the
// stabilized fraction rule. Mirrors the written definition term by term.
template <typename T>
std::vector<double> dense_relprop(const std::vector<double>& r_out,
                                  const lrplab::TensorT<T>& weights,
                                  const lrplab::TensorT<T>& bias,
                                  const std::vector<double>& x, double eps) {
  const int out_n = weights.shape[0], in_n = weights.shape[1];
  std::vector<double> r_in(in_n, 0.0);
  for (int j = 0; j < out_n; ++j) {
    double z = bias.data.empty() ? 0.0 : double(bias.data[j]);
    for (int i = 0; i < in_n; ++i) z += x[i] * double(weights.data[j * in_n + i]);
    double denom = z + eps * (z >= 0 ? 1.0 : -1.0);
    if (denom == 0.0) continue;
    for (int i = 0; i < in_n; ++i)
      r_in[i] += x[i] * double(weights.data[j * in_n + i]) / denom * r_out[j];
  }
  return r_in;
}

}  // namespace oracle
