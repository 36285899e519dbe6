#pragma once

// Procedural handwritten-digit corpus. Digits are drawn as jittered stroke
// skeletons and rasterized with anti-aliasing onto a black background, then
// written in the standard IDX layout, so the rest of the pipeline cannot
// tell it apart from the real thing. Used by tests and any machine where
// the canonical corpus files are not on disk.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "lrplab/errors.hpp"
#include "lrplab/mnist.hpp"
#include "lrplab/rng.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab::synth {

struct Point {
  double x, y;
};

using Polyline = std::vector<Point>;

namespace detail {

inline Polyline arc(double cx, double cy, double rx, double ry, double a0,
                    double a1, int steps = 14) {
  Polyline p;
  for (int i = 0; i <= steps; ++i) {
    double t = a0 + (a1 - a0) * i / steps;
    p.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return p;
}

// Stroke skeletons in the unit square, y growing downward.
inline std::vector<Polyline> digit_strokes(int digit) {
  const double pi = 3.14159265358979323846;
  switch (digit) {
    case 0:
      return {arc(0.5, 0.5, 0.21, 0.30, 0, 2 * pi, 26)};
    case 1:
      return {{{0.38, 0.30}, {0.52, 0.18}}, {{0.52, 0.18}, {0.52, 0.82}}};
    case 2:
      return {arc(0.5, 0.33, 0.185, 0.15, -pi, 0.25 * pi, 12),
              {{0.64, 0.45}, {0.31, 0.80}},
              {{0.31, 0.80}, {0.71, 0.80}}};
    case 3:
      return {arc(0.47, 0.32, 0.175, 0.14, -0.85 * pi, 0.5 * pi, 12),
              arc(0.47, 0.64, 0.20, 0.17, -0.5 * pi, 0.85 * pi, 12)};
    case 4:
      return {{{0.60, 0.18}, {0.30, 0.62}},
              {{0.30, 0.62}, {0.74, 0.62}},
              {{0.60, 0.18}, {0.60, 0.82}}};
    case 5:
      return {{{0.68, 0.18}, {0.34, 0.18}},
              {{0.34, 0.18}, {0.33, 0.45}},
              arc(0.48, 0.62, 0.19, 0.185, -0.55 * pi, 0.8 * pi, 12)};
    case 6:
      return {{{0.63, 0.18}, {0.40, 0.45}},
              arc(0.49, 0.63, 0.17, 0.185, 0, 2 * pi, 22)};
    case 7:
      return {{{0.30, 0.20}, {0.70, 0.20}}, {{0.70, 0.20}, {0.42, 0.82}}};
    case 8:
      return {arc(0.5, 0.335, 0.15, 0.145, 0, 2 * pi, 20),
              arc(0.5, 0.655, 0.185, 0.165, 0, 2 * pi, 22)};
    case 9:
      return {arc(0.5, 0.37, 0.17, 0.165, 0, 2 * pi, 22),
              {{0.665, 0.40}, {0.58, 0.82}}};
    default:
      throw ArgumentError("digit must be 0..9");
  }
}

inline double dist_to_segment(double px, double py, const Point& a, const Point& b) {
  double vx = b.x - a.x, vy = b.y - a.y;
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace detail

// Renders one digit as a [1,28,28] float image in [0,1]. The seed drives
// the jitter: rotation, anisotropic scale, shear, translation, stroke
// width, and peak ink intensity.
inline Tensor render_digit(int digit, std::uint64_t seed) {
  auto strokes = detail::digit_strokes(digit);
  Rng rng(seed);
  const double rot = rng.uniform(-0.14, 0.14);
  const double sx = rng.uniform(0.80, 1.08);
  const double sy = rng.uniform(0.80, 1.08);
  const double shear = rng.uniform(-0.14, 0.14);
  const double tx = rng.uniform(-1.8, 1.8);
  const double ty = rng.uniform(-1.8, 1.8);
  const double radius = rng.uniform(0.80, 1.45);   // stroke half width, pixels
  const double peak = rng.uniform(0.78, 1.0);
  const double soft = 0.9;                         // anti-aliasing falloff, pixels

  const double c = std::cos(rot), s = std::sin(rot);
  auto map = [&](const Point& p) -> Point {
    // center, shear, scale, rotate, then place on the 28x28 canvas
    double ux = (p.x - 0.5) + shear * (p.y - 0.5);
    double uy = p.y - 0.5;
    ux *= sx * 22.0;
    uy *= sy * 22.0;
    double rxp = c * ux - s * uy;
    double ryp = s * ux + c * uy;
    return {rxp + 14.0 + tx, ryp + 14.0 + ty};
  };

  std::vector<std::array<Point, 2>> segs;
  for (const Polyline& line : strokes)
    for (std::size_t i = 0; i + 1 < line.size(); ++i)
      segs.push_back({map(line[i]), map(line[i + 1])});

  Tensor img({1, 28, 28});
  const double reach = radius + soft;
  for (const auto& seg : segs) {
    int x0 = int(std::floor(std::min(seg[0].x, seg[1].x) - reach));
    int x1 = int(std::ceil(std::max(seg[0].x, seg[1].x) + reach));
    int y0 = int(std::floor(std::min(seg[0].y, seg[1].y) - reach));
    int y1 = int(std::ceil(std::max(seg[0].y, seg[1].y) + reach));
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, 27);
    y1 = std::min(y1, 27);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double d = detail::dist_to_segment(x + 0.5, y + 0.5, seg[0], seg[1]);
        double v = peak * std::clamp(1.0 - (d - radius) / soft, 0.0, 1.0);
        float& px = img.data[std::size_t(y) * 28 + x];
        px = std::max(px, float(v));
      }
    }
  }
  return img;
}

// Generates a balanced corpus of the requested sizes and writes the four
// standard IDX files (uncompressed) into dir.
inline void write_corpus(const std::filesystem::path& dir, int train_n, int test_n,
                         std::uint64_t seed) {
  if (train_n <= 0 || test_n <= 0)
    throw ArgumentError("corpus sizes must be positive");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  auto emit = [&](int n, std::uint64_t split_tag, const std::string& img_name,
                  const std::string& lbl_name) {
    std::vector<Tensor> images;
    images.reserve(std::size_t(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    // balanced labels in a deterministic shuffled order
    for (int i = 0; i < n; ++i) labels[std::size_t(i)] = i % 10;
    Rng order_rng(derive_seed(seed, split_tag, 0));
    order_rng.shuffle(labels);
    for (int i = 0; i < n; ++i)
      images.push_back(render_digit(labels[std::size_t(i)],
                                    derive_seed(seed, split_tag, std::uint64_t(i) + 1)));
    auto write_bytes = [&](const std::filesystem::path& p,
                           const std::vector<std::uint8_t>& bytes) {
      std::ofstream f(p, std::ios::binary);
      if (!f) throw IoError("cannot write " + p.string());
      f.write(reinterpret_cast<const char*>(bytes.data()),
              std::streamsize(bytes.size()));
      if (!f) throw IoError("short write to " + p.string());
    };
    write_bytes(dir / img_name, serialize_idx_images(images));
    write_bytes(dir / lbl_name, serialize_idx_labels(labels));
  };

  emit(train_n, 0x7121u, "train-images-idx3-ubyte", "train-labels-idx1-ubyte");
  emit(test_n, 0x7e57u, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte");
}

// Ensures a usable corpus exists at dir: reuses complete files, otherwise
// generates them. Returns dir for convenience.
inline std::filesystem::path ensure_corpus(const std::filesystem::path& dir,
                                           int train_n, int test_n,
                                           std::uint64_t seed) {
  bool complete = true;
  for (const char* name :
       {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"}) {
    if (!std::filesystem::exists(dir / name) &&
        !std::filesystem::exists(dir / (std::string(name) + ".gz"))) {
      complete = false;
      break;
    }
  }
  if (!complete) write_corpus(dir, train_n, test_n, seed);
  return dir;
}

}  // namespace lrplab::synth
