#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"
#include "lrplab/rng.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab {

enum class Split { train, test };

// A labeled image corpus. Images are [1,H,W] float tensors in [0,1].
struct Dataset {
  std::vector<Tensor> images;
  std::vector<int> labels;

  std::size_t size() const { return images.size(); }
};

namespace detail {

inline std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

}  // namespace detail

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Inflates a gzip stream. Input must start with the 1f 8b signature.
inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
  z_stream strm{};
  if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK)
    throw IoError("zlib inflateInit failed");
  std::vector<std::uint8_t> out;
  out.reserve(in.size() * 4);
  std::uint8_t buf[1 << 16];
  strm.next_in = const_cast<Bytef*>(in.data());
  strm.avail_in = static_cast<uInt>(in.size());
  int ret = Z_OK;
  do {
    strm.next_out = buf;
    strm.avail_out = sizeof(buf);
    ret = inflate(&strm, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&strm);
      throw FormatError("corrupt gzip stream (zlib code " + std::to_string(ret) + ")");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - strm.avail_out));
  } while (ret != Z_STREAM_END && (strm.avail_in > 0 || strm.avail_out == 0));
  inflateEnd(&strm);
  if (ret != Z_STREAM_END) throw FormatError("truncated gzip stream");
  return out;
}

inline std::vector<std::uint8_t> gzip_compress(const std::vector<std::uint8_t>& in) {
  z_stream strm{};
  if (deflateInit2(&strm, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK)
    throw IoError("zlib deflateInit failed");
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  strm.next_in = const_cast<Bytef*>(in.data());
  strm.avail_in = static_cast<uInt>(in.size());
  int ret = Z_OK;
  do {
    strm.next_out = buf;
    strm.avail_out = sizeof(buf);
    ret = deflate(&strm, Z_FINISH);
    out.insert(out.end(), buf, buf + (sizeof(buf) - strm.avail_out));
  } while (ret != Z_STREAM_END);
  deflateEnd(&strm);
  return out;
}

// Reads a whole file; transparently gunzips when the gzip signature is seen.
inline std::vector<std::uint8_t> read_file_maybe_gzip(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) return gunzip(bytes);
  return bytes;
}

// Parses an images file: big-endian magic 0x00000803, count, rows, cols,
// then one unsigned byte per pixel. Pixels are normalized to [0,1].
inline std::vector<Tensor> parse_idx_images(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16) throw FormatError("images file shorter than its header");
  std::uint32_t magic = detail::read_be32(bytes.data());
  if (magic != kIdxImagesMagic)
    throw FormatError("bad images magic " + std::to_string(magic));
  std::uint32_t n = detail::read_be32(bytes.data() + 4);
  std::uint32_t rows = detail::read_be32(bytes.data() + 8);
  std::uint32_t cols = detail::read_be32(bytes.data() + 12);
  if (rows == 0 || cols == 0) throw FormatError("images file with zero extent");
  std::size_t need = 16 + std::size_t(n) * rows * cols;
  if (bytes.size() != need)
    throw FormatError("images payload is " + std::to_string(bytes.size() - 16) +
                      " bytes, expected " + std::to_string(need - 16));
  std::vector<Tensor> images;
  images.reserve(n);
  const std::uint8_t* p = bytes.data() + 16;
  for (std::uint32_t i = 0; i < n; ++i) {
    Tensor img({1, int(rows), int(cols)});
    for (std::size_t j = 0; j < std::size_t(rows) * cols; ++j)
      img.data[j] = float(p[j]) / 255.0f;
    p += std::size_t(rows) * cols;
    images.push_back(std::move(img));
  }
  return images;
}

inline std::vector<int> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw FormatError("labels file shorter than its header");
  std::uint32_t magic = detail::read_be32(bytes.data());
  if (magic != kIdxLabelsMagic)
    throw FormatError("bad labels magic " + std::to_string(magic));
  std::uint32_t n = detail::read_be32(bytes.data() + 4);
  if (bytes.size() != 8 + std::size_t(n))
    throw FormatError("labels payload does not match its count field");
  std::vector<int> labels(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    int v = bytes[8 + i];
    if (v > 9) throw FormatError("label " + std::to_string(v) + " out of range 0..9");
    labels[i] = v;
  }
  return labels;
}

// Writes images back out in the same format, quantizing to bytes.
inline std::vector<std::uint8_t> serialize_idx_images(const std::vector<Tensor>& images) {
  if (images.empty()) throw ArgumentError("cannot serialize an empty image list");
  int rows = images[0].shape[1], cols = images[0].shape[2];
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.size() * std::size_t(rows) * cols);
  detail::write_be32(out, kIdxImagesMagic);
  detail::write_be32(out, std::uint32_t(images.size()));
  detail::write_be32(out, std::uint32_t(rows));
  detail::write_be32(out, std::uint32_t(cols));
  for (const Tensor& img : images) {
    if (img.shape != std::vector<int>{1, rows, cols})
      throw DimensionError("all serialized images must share one shape");
    for (float v : img.data) {
      float clamped = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
      out.push_back(std::uint8_t(clamped * 255.0f + 0.5f));
    }
  }
  return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  detail::write_be32(out, kIdxLabelsMagic);
  detail::write_be32(out, std::uint32_t(labels.size()));
  for (int v : labels) {
    if (v < 0 || v > 9) throw ArgumentError("label out of range 0..9");
    out.push_back(std::uint8_t(v));
  }
  return out;
}

inline std::filesystem::path find_idx_file(const std::filesystem::path& dir,
                                           const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    std::filesystem::path p = dir / (stem + suffix);
    if (std::filesystem::exists(p)) return p;
  }
  throw IoError("missing " + (dir / stem).string() + " (also tried .gz)");
}

// Loads one split from a directory laid out with the standard file names.
// strict_counts enforces the canonical 60000/10000 sizes.
inline Dataset load_mnist(const std::filesystem::path& dir, Split split,
                          bool strict_counts = true) {
  const bool train = split == Split::train;
  const std::string img_stem = train ? "train-images-idx3-ubyte" : "t10k-images-idx3-ubyte";
  const std::string lbl_stem = train ? "train-labels-idx1-ubyte" : "t10k-labels-idx1-ubyte";
  Dataset d;
  d.images = parse_idx_images(read_file_maybe_gzip(find_idx_file(dir, img_stem)));
  d.labels = parse_idx_labels(read_file_maybe_gzip(find_idx_file(dir, lbl_stem)));
  if (d.images.size() != d.labels.size())
    throw FormatError("image count " + std::to_string(d.images.size()) +
                      " != label count " + std::to_string(d.labels.size()));
  const std::size_t expected = train ? 60000 : 10000;
  if (strict_counts && d.size() != expected)
    throw FormatError("split has " + std::to_string(d.size()) +
                      " samples, expected " + std::to_string(expected));
  return d;
}

// Corner-aligned bilinear enlargement of one image to 140x140.
inline Tensor enlarge_image(const Tensor& img) {
  return bilinear_resize(img, 140, 140);
}

// Whole-dataset enlargement. Callers that cannot afford the memory do the
// same thing lazily per batch; the per-sample values are identical.
inline Dataset enlarge_dataset(const Dataset& d) {
  Dataset out;
  out.labels = d.labels;
  out.images.reserve(d.images.size());
  for (const Tensor& img : d.images) out.images.push_back(enlarge_image(img));
  return out;
}

// Draws n distinct indices from [0, size) deterministically from the seed.
inline std::vector<int> sample_subset(std::size_t size, int n, std::uint64_t seed) {
  if (n < 0 || std::size_t(n) > size)
    throw ArgumentError("subset size " + std::to_string(n) +
                        " exceeds dataset size " + std::to_string(size));
  Rng rng(seed);
  return rng.sample_indices(int(size), n);
}

// Walks the dataset in shuffled batches. Each epoch reshuffles with a seed
// derived from (base seed, epoch); the tail that does not fill a whole
// batch is dropped, so an epoch has floor(n / batch) iterations.
class BatchIterator {
 public:
  BatchIterator(int n, int batch, std::uint64_t seed)
      : n_(n), batch_(batch), seed_(seed) {
    if (n <= 0 || batch <= 0 || batch > n)
      throw ArgumentError("batch iterator needs 0 < batch <= n");
    reshuffle();
  }

  int batches_per_epoch() const { return n_ / batch_; }
  int epoch() const { return epoch_; }

  std::vector<int> next() {
    if (cursor_ + batch_ > batches_per_epoch() * batch_) {
      ++epoch_;
      cursor_ = 0;
      reshuffle();
    }
    std::vector<int> out(order_.begin() + cursor_, order_.begin() + cursor_ + batch_);
    cursor_ += batch_;
    return out;
  }

 private:
  void reshuffle() {
    order_.resize(n_);
    for (int i = 0; i < n_; ++i) order_[i] = i;
    Rng rng(derive_seed(seed_, 0x50fful, epoch_));
    rng.shuffle(order_);
  }

  int n_, batch_;
  std::uint64_t seed_;
  int epoch_ = 0;
  int cursor_ = 0;
  std::vector<int> order_;
};

}  // namespace lrplab
