#include "lrplab/image.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lrplab/errors.hpp"
#include "lrplab/tensor.hpp"

using namespace lrplab;

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  EXPECT_TRUE(bool(f)) << p;
  return std::vector<unsigned char>((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lrplab_image_" + name);
}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

}  // namespace

TEST(DivergingColor, AnchorsAndClamping) {
  Rgb8 white = diverging_color(0.0);
  EXPECT_EQ(white, (Rgb8{255, 255, 255}));
  Rgb8 hot = diverging_color(1.0);
  EXPECT_EQ(hot, (Rgb8{200, 20, 30}));
  Rgb8 cold = diverging_color(-1.0);
  EXPECT_EQ(cold, (Rgb8{35, 60, 200}));
  EXPECT_EQ(diverging_color(3.5), hot);
  EXPECT_EQ(diverging_color(-42.0), cold);
}

TEST(DivergingColor, PositiveSideWarmsMonotonically) {
  int prev_g = 256;
  for (double v = 0.0; v <= 1.0; v += 0.05) {
    Rgb8 c = diverging_color(v);
    EXPECT_GE(c.r, c.g) << v;  // red never falls below green
    EXPECT_LE(int(c.g), prev_g) << v;
    prev_g = c.g;
  }
}

TEST(DivergingColor, NegativeSideCoolsMonotonically) {
  int prev_r = 256;
  for (double v = 0.0; v >= -1.0; v -= 0.05) {
    Rgb8 c = diverging_color(v);
    EXPECT_GE(c.b, c.g) << v;
    EXPECT_LE(int(c.r), prev_r) << v;
    prev_r = c.r;
  }
}

TEST(RenderHeatmap, UpscalesInBlocks) {
  TensorT<double> map({2, 2}, {1.0, -1.0, 0.0, 0.5});
  Image img = render_heatmap(map, 3);
  EXPECT_EQ(img.width, 6);
  EXPECT_EQ(img.height, 6);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      EXPECT_EQ(img.at(x, y), diverging_color(1.0));
      EXPECT_EQ(img.at(3 + x, y), diverging_color(-1.0));
      EXPECT_EQ(img.at(x, 3 + y), diverging_color(0.0));
      EXPECT_EQ(img.at(3 + x, 3 + y), diverging_color(0.5));
    }
}

TEST(RenderHeatmap, RejectsBadInput) {
  TensorT<double> cube({1, 2, 2});
  EXPECT_THROW(render_heatmap(cube), DimensionError);
  TensorT<double> flat({4});
  EXPECT_THROW(render_heatmap(flat), DimensionError);
  TensorT<double> ok({1, 1}, {0.0});
  EXPECT_THROW(render_heatmap(ok, 0), ArgumentError);
}

TEST(RenderGrayscale, InkOnWhite) {
  TensorT<double> map({1, 2}, {0.0, 1.0});
  Image img = render_grayscale(map);
  EXPECT_EQ(img.at(0, 0), (Rgb8{255, 255, 255}));
  EXPECT_EQ(img.at(1, 0), (Rgb8{0, 0, 0}));
}

TEST(Ppm, ExactBytes) {
  Image img(2, 1);
  img.at(0, 0) = Rgb8{1, 2, 3};
  img.at(1, 0) = Rgb8{200, 20, 30};
  auto path = temp_path("two.ppm");
  write_ppm(path, img);
  auto bytes = read_file(path);
  const std::string header = "P6\n2 1\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 6);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + long(header.size())), header);
  const unsigned char tail[6] = {1, 2, 3, 200, 20, 30};
  for (int i = 0; i < 6; ++i) EXPECT_EQ(bytes[header.size() + i], tail[i]);
  std::filesystem::remove(path);
}

TEST(Ppm, UnwritablePathThrows) {
  Image img(1, 1);
  EXPECT_THROW(write_ppm("/nonexistent-dir/x.ppm", img), IoError);
}

TEST(Png, ChunksCrcAndPixels) {
  Image img(3, 2);
  img.at(0, 0) = Rgb8{10, 20, 30};
  img.at(2, 1) = Rgb8{200, 100, 50};
  auto path = temp_path("three.png");
  write_png(path, img);
  auto bytes = read_file(path);

  const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  ASSERT_GE(bytes.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(bytes[i], sig[i]);

  // walk the chunks, checking each CRC
  std::size_t pos = 8;
  std::vector<std::string> types;
  std::vector<unsigned char> idat;
  std::uint32_t width = 0, height = 0;
  int bit_depth = -1, color_type = -1;
  while (pos + 12 <= bytes.size()) {
    const std::uint32_t len = be32(&bytes[pos]);
    ASSERT_LE(pos + 12 + len, bytes.size());
    std::string type(bytes.begin() + long(pos) + 4, bytes.begin() + long(pos) + 8);
    types.push_back(type);
    const std::uint32_t want_crc = be32(&bytes[pos + 8 + len]);
    std::uint32_t crc = crc32(0, &bytes[pos + 4], len + 4);
    EXPECT_EQ(crc, want_crc) << type;
    if (type == "IHDR") {
      width = be32(&bytes[pos + 8]);
      height = be32(&bytes[pos + 12]);
      bit_depth = bytes[pos + 16];
      color_type = bytes[pos + 17];
    } else if (type == "IDAT") {
      idat.insert(idat.end(), bytes.begin() + long(pos) + 8,
                  bytes.begin() + long(pos) + 8 + len);
    }
    pos += 12 + len;
  }
  EXPECT_EQ(pos, bytes.size());
  ASSERT_GE(types.size(), 3u);
  EXPECT_EQ(types.front(), "IHDR");
  EXPECT_EQ(types.back(), "IEND");
  EXPECT_EQ(width, 3u);
  EXPECT_EQ(height, 2u);
  EXPECT_EQ(bit_depth, 8);
  EXPECT_EQ(color_type, 2);  // rgb

  // inflate and check the filter-0 scanlines carry the exact pixels
  std::vector<unsigned char> raw(std::size_t(height) * (1 + 3 * width));
  uLongf out_len = raw.size();
  ASSERT_EQ(uncompress(raw.data(), &out_len, idat.data(), idat.size()), Z_OK);
  ASSERT_EQ(out_len, raw.size());
  const std::size_t stride = 1 + 3 * width;
  EXPECT_EQ(raw[0], 0);           // filter byte
  EXPECT_EQ(raw[1], 10);
  EXPECT_EQ(raw[2], 20);
  EXPECT_EQ(raw[3], 30);
  EXPECT_EQ(raw[stride], 0);
  EXPECT_EQ(raw[stride + 1 + 3 * 2 + 0], 200);
  EXPECT_EQ(raw[stride + 1 + 3 * 2 + 1], 100);
  EXPECT_EQ(raw[stride + 1 + 3 * 2 + 2], 50);
  std::filesystem::remove(path);
}

TEST(LinePlot, FrameAndSeriesPixels) {
  PlotSeries s;
  for (int i = 0; i <= 10; ++i) {
    s.x.push_back(double(i));
    s.y.push_back(double(i) * 0.5);
  }
  s.color = Rgb8{20, 90, 200};
  Image img = render_line_plot({s});
  EXPECT_EQ(img.width, 640);
  EXPECT_EQ(img.height, 400);
  int series_px = 0, frame_px = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y) == s.color) ++series_px;
      if (img.at(x, y) == (Rgb8{120, 120, 120})) ++frame_px;
    }
  EXPECT_GT(series_px, 100);
  EXPECT_GT(frame_px, 100);
}

TEST(LinePlot, DegenerateInputsStillRender) {
  PlotSeries point;
  point.x = {1.0};
  point.y = {2.0};
  Image one = render_line_plot({point});
  EXPECT_EQ(one.width, 640);

  PlotSeries flat;
  flat.x = {0.0, 1.0, 2.0};
  flat.y = {3.0, 3.0, 3.0};  // zero vertical range
  Image two = render_line_plot({flat}, 320, 200);
  EXPECT_EQ(two.width, 320);
  EXPECT_EQ(two.height, 200);

  Image empty = render_line_plot({});
  EXPECT_EQ(empty.width, 640);
}

TEST(ImageBasics, BoundsChecked) {
  Image img(4, 3);
  EXPECT_EQ(img.at(3, 2), (Rgb8{255, 255, 255}));
  EXPECT_THROW(img.at(4, 0), DimensionError);
  EXPECT_THROW(img.at(0, 3), DimensionError);
  EXPECT_THROW(img.at(-1, 0), DimensionError);
}
