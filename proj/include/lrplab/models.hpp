#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"
#include "lrplab/nn.hpp"

namespace lrplab {

// The four study networks. Channel widths and dense sizes are tuned so the
// parameter totals match the reference counts within a fraction of a
// percent (s1 270556, s2 276406, al1 2663831, al2 2875591).
inline std::string builtin_recipe(const std::string& name) {
  if (name == "s1")
    return
        "input 1 28 28\n"
        "conv 16 3 1 0\n"
        "relu\n"
        "conv 16 3 1 0\n"
        "relu\n"
        "maxpool 2 2\n"
        "conv 32 3 1 0\n"
        "relu\n"
        "conv 32 3 1 0\n"
        "relu\n"
        "maxpool 2 2\n"
        "flatten\n"
        "dense 486\n"
        "relu\n"
        "dense 10\n";
  if (name == "s2")
    return
        "input 1 140 140\n"
        "conv 16 6 2 2\n"
        "relu\n"
        "conv 16 3 1 0\n"
        "relu\n"
        "maxpool 2 2\n"
        "conv 32 3 1 0\n"
        "relu\n"
        "conv 32 3 1 0\n"
        "relu\n"
        "maxpool 2 2\n"
        "flatten\n"
        "dense 36\n"
        "relu\n"
        "dense 10\n";
  if (name == "al1")
    return
        "input 1 28 28\n"
        "conv 32 3 1 1\n"
        "relu\n"
        "maxpool 2 2\n"
        "conv 64 3 1 1\n"
        "relu\n"
        "maxpool 2 2\n"
        "conv 96 3 1 1\n"
        "relu\n"
        "conv 96 3 1 1\n"
        "relu\n"
        "conv 64 3 1 1\n"
        "relu\n"
        "maxpool 3 2\n"
        "flatten\n"
        "dense 1299\n"
        "relu\n"
        "dense 1299\n"
        "relu\n"
        "dense 10\n";
  if (name == "al2")
    return
        "input 1 140 140\n"
        "conv 32 8 4 2\n"
        "relu\n"
        "conv 64 3 1 1\n"
        "relu\n"
        "maxpool 3 2\n"
        "conv 96 3 1 1\n"
        "relu\n"
        "conv 96 3 1 1\n"
        "relu\n"
        "conv 64 3 1 1\n"
        "relu\n"
        "maxpool 3 2\n"
        "flatten\n"
        "dense 569\n"
        "relu\n"
        "dense 569\n"
        "relu\n"
        "dense 10\n";
  throw ConfigError("unknown model name '" + name + "' (expected s1, s2, al1, al2)");
}

inline bool is_builtin_model(const std::string& name) {
  return name == "s1" || name == "s2" || name == "al1" || name == "al2";
}

// Resolves a model argument: a builtin name, or a path to a recipe file.
inline std::string resolve_recipe(const std::string& name_or_path) {
  if (is_builtin_model(name_or_path)) return builtin_recipe(name_or_path);
  std::ifstream f(name_or_path);
  if (!f)
    throw ConfigError("model '" + name_or_path +
                      "' is neither a builtin name nor a readable recipe file");
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return text;
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

struct ByteReader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw FormatError("checkpoint file truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes.data() + pos, n);
    pos += n;
  }
};

template <typename T>
void put_tensor_values(std::vector<std::uint8_t>& out, const TensorT<T>& t) {
  put_u64(out, t.numel());
  for (T v : t.data) {
    float f = float(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

template <typename T>
void read_tensor_values(ByteReader& r, TensorT<T>& t, const char* what) {
  std::uint64_t n = r.u64();
  if (n != t.numel())
    throw FormatError(std::string("checkpoint ") + what + " has " +
                      std::to_string(n) + " values, model expects " +
                      std::to_string(t.numel()));
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    std::uint32_t bits = r.u32();
    float f;
    std::memcpy(&f, &bits, 4);
    t.data[i] = T(f);
  }
}

}  // namespace detail

constexpr char kCheckpointMagic[8] = {'L', 'R', 'P', 'L', 'C', 'K', 'P', '1'};

// Checkpoint layout (little endian, float32 values):
//   magic "LRPLCKP1"
//   u32 recipe length, recipe text
//   u64 training iteration
//   u32 layer count
//   per parameterized layer: u32 layer index, weights block, bias block
//     (block = u64 count + count float32 words)
//   u8 has optimizer state; if set: u64 step count, then m/v blocks for
//   weights and bias of every parameterized layer in order
template <typename T>
std::vector<std::uint8_t> serialize_checkpoint(const ModelT<T>& model,
                                               std::uint64_t iteration,
                                               const AdamStateT<T>* adam = nullptr) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 8);
  detail::put_u32(out, std::uint32_t(model.recipe.size()));
  out.insert(out.end(), model.recipe.begin(), model.recipe.end());
  detail::put_u64(out, iteration);
  detail::put_u32(out, std::uint32_t(model.layers.size()));
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (!model.layers[k].has_params()) continue;
    detail::put_u32(out, std::uint32_t(k));
    detail::put_tensor_values(out, model.layers[k].weights);
    detail::put_tensor_values(out, model.layers[k].bias);
  }
  out.push_back(adam ? 1 : 0);
  if (adam) {
    detail::put_u64(out, std::uint64_t(adam->t));
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
      if (!model.layers[k].has_params()) continue;
      detail::put_tensor_values(out, adam->mw[k]);
      detail::put_tensor_values(out, adam->vw[k]);
      detail::put_tensor_values(out, adam->mb[k]);
      detail::put_tensor_values(out, adam->vb[k]);
    }
  }
  return out;
}

template <typename T>
struct CheckpointT {
  ModelT<T> model;
  std::uint64_t iteration = 0;
  bool has_adam = false;
  AdamStateT<T> adam;
};

template <typename T>
CheckpointT<T> parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r{bytes};
  char magic[8];
  r.raw(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw FormatError("not a checkpoint file (bad magic)");
  std::uint32_t recipe_len = r.u32();
  r.need(recipe_len);
  std::string recipe(reinterpret_cast<const char*>(bytes.data() + r.pos), recipe_len);
  r.pos += recipe_len;

  CheckpointT<T> ck;
  ck.model = parse_recipe<T>(recipe);
  init_params(ck.model, 0);  // allocate parameter tensors, then overwrite
  ck.iteration = r.u64();
  std::uint32_t layer_count = r.u32();
  if (layer_count != std::uint32_t(ck.model.layers.size()))
    throw FormatError("checkpoint layer count does not match its recipe");
  for (std::size_t k = 0; k < ck.model.layers.size(); ++k) {
    if (!ck.model.layers[k].has_params()) continue;
    std::uint32_t idx = r.u32();
    if (idx != k) throw FormatError("checkpoint layers out of order");
    detail::read_tensor_values(r, ck.model.layers[k].weights, "weights");
    detail::read_tensor_values(r, ck.model.layers[k].bias, "bias");
  }
  r.need(1);
  ck.has_adam = bytes[r.pos++] != 0;
  if (ck.has_adam) {
    ck.adam = adam_init(ck.model);
    ck.adam.t = std::int64_t(r.u64());
    for (std::size_t k = 0; k < ck.model.layers.size(); ++k) {
      if (!ck.model.layers[k].has_params()) continue;
      detail::read_tensor_values(r, ck.adam.mw[k], "adam m");
      detail::read_tensor_values(r, ck.adam.vw[k], "adam v");
      detail::read_tensor_values(r, ck.adam.mb[k], "adam mb");
      detail::read_tensor_values(r, ck.adam.vb[k], "adam vb");
    }
  }
  if (r.pos != bytes.size()) throw FormatError("trailing bytes in checkpoint");
  return ck;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelT<T>& model,
                     std::uint64_t iteration, const AdamStateT<T>* adam = nullptr) {
  auto bytes = serialize_checkpoint(model, iteration, adam);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

template <typename T>
CheckpointT<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return parse_checkpoint<T>(bytes);
}

}  // namespace lrplab
