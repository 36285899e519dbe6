#pragma once

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab {

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8& o) const { return r == o.r && g == o.g && b == o.b; }
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<Rgb8> pixels;

  Image() = default;
  Image(int w, int h, Rgb8 fill = {255, 255, 255})
      : width(w), height(h), pixels(std::size_t(w) * std::size_t(h), fill) {
    if (w <= 0 || h <= 0) throw DimensionError("image extents must be positive");
  }

  Rgb8& at(int x, int y) {
    if (x < 0 || x >= width || y < 0 || y >= height)
      throw DimensionError("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                           ") outside " + std::to_string(width) + "x" +
                           std::to_string(height));
    return pixels[std::size_t(y) * width + x];
  }
  const Rgb8& at(int x, int y) const { return const_cast<Image*>(this)->at(x, y); }
};

// Symmetric diverging colormap over [-1,1]: negative values fade into blue,
// zero is white, positive values fade into red. Out-of-range input clips.
inline Rgb8 diverging_color(double v) {
  v = std::clamp(v, -1.0, 1.0);
  auto chan = [](double x) {
    return std::uint8_t(std::lround(std::clamp(x, 0.0, 255.0)));
  };
  if (v >= 0.0) {
    // white -> red (200, 20, 30)
    return Rgb8{chan(255.0 - v * 55.0), chan(255.0 - v * 235.0),
                chan(255.0 - v * 225.0)};
  }
  // white -> blue (35, 60, 200)
  return Rgb8{chan(255.0 + v * 220.0), chan(255.0 + v * 195.0),
              chan(255.0 + v * 55.0)};
}

// Renders a [-1,1] heatmap with the diverging colormap, upscaled by an
// integer factor with hard pixel edges.
template <typename T>
Image render_heatmap(const TensorT<T>& map, int scale = 1) {
  if (map.rank() != 2) throw DimensionError("render_heatmap expects a [H,W] map");
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  const int h = map.shape[0], w = map.shape[1];
  Image img(w * scale, h * scale);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Rgb8 c = diverging_color(double(map.data[std::size_t(y) * w + x]));
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx)
          img.at(x * scale + dx, y * scale + dy) = c;
    }
  return img;
}

// Renders a [0,1] grayscale image (dark ink on white), same upscaling.
template <typename T>
Image render_grayscale(const TensorT<T>& map, int scale = 1) {
  if (map.rank() != 2) throw DimensionError("render_grayscale expects a [H,W] map");
  if (scale < 1) throw ArgumentError("scale must be >= 1");
  const int h = map.shape[0], w = map.shape[1];
  Image img(w * scale, h * scale);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = std::clamp(double(map.data[std::size_t(y) * w + x]), 0.0, 1.0);
      auto level = std::uint8_t(std::lround(255.0 * (1.0 - v)));
      Rgb8 c{level, level, level};
      for (int dy = 0; dy < scale; ++dy)
        for (int dx = 0; dx < scale; ++dx)
          img.at(x * scale + dx, y * scale + dy) = c;
    }
  return img;
}

inline void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write image " + path.string());
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (const Rgb8& p : img.pixels) {
    char bytes[3] = {char(p.r), char(p.g), char(p.b)};
    f.write(bytes, 3);
  }
  if (!f) throw IoError("short write to " + path.string());
}

namespace imgdetail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char type[5],
                      const std::vector<std::uint8_t>& data) {
  put_be32(out, std::uint32_t(data.size()));
  std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, out.data() + crc_start, uInt(4 + data.size()));
  put_be32(out, std::uint32_t(crc));
}

inline std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& raw) {
  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), uLong(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK)
    throw Error("deflate failed");
  out.resize(bound);
  return out;
}

}  // namespace imgdetail

// Minimal truecolor PNG: 8-bit RGB, one IDAT, filter 0 on every scanline.
inline std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

  std::vector<std::uint8_t> ihdr;
  imgdetail::put_be32(ihdr, std::uint32_t(img.width));
  imgdetail::put_be32(ihdr, std::uint32_t(img.height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // deflate
  ihdr.push_back(0);   // adaptive filtering
  ihdr.push_back(0);   // no interlace
  imgdetail::put_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> raw;
  raw.reserve(std::size_t(img.height) * (1 + 3 * std::size_t(img.width)));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);  // filter type none
    for (int x = 0; x < img.width; ++x) {
      const Rgb8& p = img.pixels[std::size_t(y) * img.width + x];
      raw.push_back(p.r);
      raw.push_back(p.g);
      raw.push_back(p.b);
    }
  }
  imgdetail::put_chunk(out, "IDAT", imgdetail::zlib_deflate(raw));
  imgdetail::put_chunk(out, "IEND", {});
  return out;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write image " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

inline void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb8 color) {
  // Bresenham, clipped to the canvas
  int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    if (x0 >= 0 && x0 < img.width && y0 >= 0 && y0 < img.height)
      img.pixels[std::size_t(y0) * img.width + x0] = color;
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  Rgb8 color{200, 20, 30};
};

// Minimal line plot: white canvas, gray frame, series polylines scaled into
// the frame. Good enough to see a trend; not a charting library.
inline Image render_line_plot(const std::vector<PlotSeries>& series, int width = 640,
                              int height = 400) {
  Image img(width, height);
  const int ml = 50, mr = 15, mt = 15, mb = 35;  // margins
  const Rgb8 frame{120, 120, 120};
  draw_line(img, ml, mt, ml, height - mb, frame);
  draw_line(img, ml, height - mb, width - mr, height - mb, frame);

  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;

  auto px = [&](double x) {
    return ml + int(std::lround((x - xmin) / (xmax - xmin) * (width - ml - mr - 1)));
  };
  auto py = [&](double y) {
    return height - mb -
           int(std::lround((y - ymin) / (ymax - ymin) * (height - mt - mb - 1)));
  };
  for (const auto& s : series) {
    for (std::size_t i = 0; i + 1 < s.x.size(); ++i)
      draw_line(img, px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), s.color);
    if (s.x.size() == 1) draw_line(img, px(s.x[0]), py(s.y[0]), px(s.x[0]), py(s.y[0]), s.color);
  }
  return img;
}

}  // namespace lrplab
