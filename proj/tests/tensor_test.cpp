#include "lrplab/tensor.hpp"

#include <gtest/gtest.h>

#include "lrplab/rng.hpp"
#include "oracles.hpp"

using lrplab::Tensor;
using lrplab::TensorT;

namespace {

Tensor random_tensor(std::vector<int> shape, lrplab::Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = float(rng.uniform(lo, hi));
  return t;
}

}  // namespace

TEST(Tensor, ConstructionAndInvariant) {
  Tensor t({2, 3});
  EXPECT_EQ(t.numel(), 6u);
  for (float v : t.data) EXPECT_EQ(v, 0.0f);

  Tensor u({2, 2}, {1, 2, 3, 4});
  EXPECT_EQ(u.at({1, 0}), 3.0f);
  u.at({1, 0}) = 7.0f;
  EXPECT_EQ(u.data[2], 7.0f);

  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), lrplab::DimensionError);
  EXPECT_THROW(Tensor({0, 3}), lrplab::DimensionError);
  EXPECT_THROW(u.at({2, 0}), lrplab::DimensionError);
  EXPECT_THROW(u.at({0}), lrplab::DimensionError);
}

TEST(Tensor, Reshape) {
  Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
  Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.at({2, 1}), 5.0f);
  EXPECT_THROW(t.reshaped({4, 2}), lrplab::DimensionError);
}

TEST(Tensor, ElementwiseOps) {
  Tensor a({3}, {1, -2, 3});
  Tensor b({3}, {4, 5, -6});
  EXPECT_EQ(lrplab::add(a, b).data, (std::vector<float>{5, 3, -3}));
  EXPECT_EQ(lrplab::sub(a, b).data, (std::vector<float>{-3, -7, 9}));
  EXPECT_EQ(lrplab::mul(a, b).data, (std::vector<float>{4, -10, -18}));
  EXPECT_EQ(lrplab::scale(a, 2.0f).data, (std::vector<float>{2, -4, 6}));
  EXPECT_EQ(lrplab::relu(a).data, (std::vector<float>{1, 0, 3}));
  Tensor c({2});
  EXPECT_THROW(lrplab::add(a, c), lrplab::DimensionError);
}

TEST(Tensor, MatmulHandValue) {
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {0, 1});
  Tensor c = lrplab::matmul(a, b);
  EXPECT_EQ(c.shape, (std::vector<int>{2, 1}));
  EXPECT_FLOAT_EQ(c.data[0], 2.0f);
  EXPECT_FLOAT_EQ(c.data[1], 4.0f);
}

TEST(Tensor, MatmulMatchesNaiveLoops) {
  lrplab::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    int m = 1 + int(rng.below(12)), k = 1 + int(rng.below(12)),
        n = 1 + int(rng.below(12));
    Tensor a = random_tensor({m, k}, rng);
    Tensor b = random_tensor({k, n}, rng);
    Tensor fast = lrplab::matmul(a, b);
    Tensor slow = oracle::matmul(a, b);
    ASSERT_EQ(fast.shape, slow.shape);
    for (std::size_t i = 0; i < fast.data.size(); ++i)
      EXPECT_NEAR(fast.data[i], slow.data[i], 1e-4f);
  }
  Tensor a({2, 3});
  Tensor b({2, 3});
  EXPECT_THROW(lrplab::matmul(a, b), lrplab::DimensionError);
}

TEST(Tensor, TransposeRoundTrip) {
  lrplab::Rng rng(5);
  Tensor a = random_tensor({3, 5}, rng);
  Tensor t = lrplab::transpose(a);
  EXPECT_EQ(t.shape, (std::vector<int>{5, 3}));
  EXPECT_EQ(t.at({4, 2}), a.at({2, 4}));
  Tensor back = lrplab::transpose(t);
  EXPECT_EQ(back.data, a.data);
}

TEST(Tensor, ConvMatchesNaiveLoops) {
  lrplab::Rng rng(23);
  for (int trial = 0; trial < 15; ++trial) {
    int c = 1 + int(rng.below(3));
    int o = 1 + int(rng.below(4));
    int k = 1 + int(rng.below(3));
    int stride = 1 + int(rng.below(2));
    int pad = int(rng.below(2));
    int h = k + int(rng.below(6));
    int w = k + int(rng.below(6));
    Tensor input = random_tensor({c, h, w}, rng);
    Tensor kernels = random_tensor({o, c, k, k}, rng);
    Tensor bias = random_tensor({o}, rng);
    Tensor fast = lrplab::conv2d(input, kernels, bias, stride, pad);
    Tensor slow = oracle::conv2d(input, kernels, bias, stride, pad);
    ASSERT_EQ(fast.shape, slow.shape);
    for (std::size_t i = 0; i < fast.data.size(); ++i)
      EXPECT_NEAR(fast.data[i], slow.data[i], 1e-4f);
  }
}

TEST(Tensor, ConvKnownValuesAndErrors) {
  // 1x3x3 input, single 2x2 kernel of ones: each output is the window sum.
  Tensor input({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor kernels({1, 1, 2, 2}, {1, 1, 1, 1});
  Tensor bias({1}, {0.5f});
  Tensor out = lrplab::conv2d(input, kernels, bias, 1, 0);
  EXPECT_EQ(out.shape, (std::vector<int>{1, 2, 2}));
  EXPECT_FLOAT_EQ(out.data[0], 12.5f);
  EXPECT_FLOAT_EQ(out.data[1], 16.5f);
  EXPECT_FLOAT_EQ(out.data[2], 24.5f);
  EXPECT_FLOAT_EQ(out.data[3], 28.5f);

  Tensor bad_kernels({1, 2, 2, 2});
  EXPECT_THROW(lrplab::conv2d(input, bad_kernels, Tensor{}, 1, 0),
               lrplab::DimensionError);
  Tensor huge({1, 1, 5, 5});
  EXPECT_THROW(lrplab::conv2d(input, huge, Tensor{}, 1, 0),
               lrplab::DimensionError);
}

TEST(Tensor, Im2colCol2imAdjoint) {
  // col2im must be the transpose of im2col as a linear map:
  // <im2col(x), y> == <x, col2im(y)> for all x, y.
  lrplab::Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    int c = 1 + int(rng.below(3)), h = 3 + int(rng.below(4)),
        w = 3 + int(rng.below(4));
    int k = 2, stride = 1 + int(rng.below(2)), pad = int(rng.below(2));
    Tensor x = random_tensor({c, h, w}, rng);
    Tensor cols = lrplab::im2col(x, k, k, stride, pad);
    Tensor y = random_tensor(cols.shape, rng);
    Tensor back = lrplab::col2im(y, {c, h, w}, k, k, stride, pad);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < cols.data.size(); ++i)
      lhs += double(cols.data[i]) * double(y.data[i]);
    for (std::size_t i = 0; i < x.data.size(); ++i)
      rhs += double(x.data[i]) * double(back.data[i]);
    EXPECT_NEAR(lhs, rhs, 1e-3);
  }
}

TEST(Tensor, MaxPoolHandValue) {
  Tensor input({1, 2, 2}, {1, 2, 3, 4});
  auto res = lrplab::maxpool2d(input, 2, 2);
  EXPECT_EQ(res.output.shape, (std::vector<int>{1, 1, 1}));
  EXPECT_FLOAT_EQ(res.output.data[0], 4.0f);
  EXPECT_EQ(res.argmax[0], 3);
}

TEST(Tensor, MaxPoolTieGoesToFirstInScanOrder) {
  Tensor input({1, 2, 2}, {5, 5, 5, 5});
  auto res = lrplab::maxpool2d(input, 2, 2);
  EXPECT_EQ(res.argmax[0], 0);
}

TEST(Tensor, MaxPoolMatchesNaiveLoops) {
  lrplab::Rng rng(47);
  for (int trial = 0; trial < 15; ++trial) {
    int c = 1 + int(rng.below(3));
    int size = 2 + int(rng.below(2));
    int stride = 1 + int(rng.below(2));
    int h = size + int(rng.below(6)) * stride;
    int w = size + int(rng.below(6)) * stride;
    Tensor input = random_tensor({c, h, w}, rng);
    auto fast = lrplab::maxpool2d(input, size, stride);
    Tensor slow = oracle::maxpool2d(input, size, stride);
    ASSERT_EQ(fast.output.shape, slow.shape);
    EXPECT_EQ(fast.output.data, slow.data);
    // every recorded winner must actually hold the output value
    for (std::size_t i = 0; i < fast.argmax.size(); ++i)
      EXPECT_EQ(input.data[std::size_t(fast.argmax[i])], fast.output.data[i]);
  }
}

TEST(Tensor, BilinearResizeHandValue) {
  // 2x2 image with columns [0,1]; widening to 4 columns must hit the
  // corner-aligned lattice 0, 1/3, 2/3, 1 on both rows.
  Tensor input({1, 2, 2}, {0, 1, 0, 1});
  Tensor out = lrplab::bilinear_resize(input, 2, 4);
  EXPECT_EQ(out.shape, (std::vector<int>{1, 2, 4}));
  const float expected[4] = {0.0f, 1.0f / 3.0f, 2.0f / 3.0f, 1.0f};
  for (int row = 0; row < 2; ++row)
    for (int i = 0; i < 4; ++i)
      EXPECT_NEAR(out.data[row * 4 + i], expected[i], 1e-6f);
}

TEST(Tensor, BilinearResizeIdentityAndCorners) {
  lrplab::Rng rng(7);
  Tensor input = random_tensor({2, 5, 4}, rng);
  Tensor same = lrplab::bilinear_resize(input, 5, 4);
  for (std::size_t i = 0; i < input.data.size(); ++i)
    EXPECT_NEAR(same.data[i], input.data[i], 1e-6f);

  Tensor big = lrplab::bilinear_resize(input, 11, 9);
  for (int c = 0; c < 2; ++c) {
    EXPECT_NEAR(big.at({c, 0, 0}), input.at({c, 0, 0}), 1e-6f);
    EXPECT_NEAR(big.at({c, 0, 8}), input.at({c, 0, 3}), 1e-6f);
    EXPECT_NEAR(big.at({c, 10, 0}), input.at({c, 4, 0}), 1e-6f);
    EXPECT_NEAR(big.at({c, 10, 8}), input.at({c, 4, 3}), 1e-6f);
  }
  EXPECT_TRUE(big.all_finite());
}

TEST(Tensor, BilinearResizeValueRangeStaysInHull) {
  lrplab::Rng rng(13);
  Tensor input = random_tensor({1, 6, 6}, rng, 0.0, 1.0);
  Tensor out = lrplab::bilinear_resize(input, 17, 23);
  float lo = *std::min_element(input.data.begin(), input.data.end());
  float hi = *std::max_element(input.data.begin(), input.data.end());
  for (float v : out.data) {
    EXPECT_GE(v, lo - 1e-6f);
    EXPECT_LE(v, hi + 1e-6f);
  }
}

TEST(Tensor, DoubleInstantiation) {
  TensorT<double> a({2, 2}, {1.0, 2.0, 3.0, 4.0});
  TensorT<double> b({2, 1}, {0.0, 1.0});
  TensorT<double> c = lrplab::matmul(a, b);
  EXPECT_DOUBLE_EQ(c.data[0], 2.0);
  EXPECT_DOUBLE_EQ(c.data[1], 4.0);
  TensorT<float> f = a.cast<float>();
  EXPECT_EQ(f.data[3], 4.0f);
}

TEST(Rng, DeterministicAndWellFormed) {
  lrplab::Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.raw(), b.raw());

  lrplab::Rng c(1);
  auto idx = c.sample_indices(100, 10);
  EXPECT_EQ(idx.size(), 10u);
  std::vector<int> sorted = idx;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (int i : idx) {
    EXPECT_GE(i, 0);
    EXPECT_LT(i, 100);
  }
  EXPECT_THROW(c.sample_indices(3, 4), lrplab::ArgumentError);

  // derived seeds for different streams/indices must differ
  EXPECT_NE(lrplab::derive_seed(1, 0, 0), lrplab::derive_seed(1, 0, 1));
  EXPECT_NE(lrplab::derive_seed(1, 0, 0), lrplab::derive_seed(1, 1, 0));
  EXPECT_NE(lrplab::derive_seed(1, 0, 0), lrplab::derive_seed(2, 0, 0));
  EXPECT_EQ(lrplab::derive_seed(7, 3, 5), lrplab::derive_seed(7, 3, 5));
}
