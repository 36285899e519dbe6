#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"
#include "lrplab/filters.hpp"
#include "lrplab/nn.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab {

// Relevance redistribution rule for linear layers.
struct LrpRule {
  enum class Kind { epsilon, alphabeta };

  Kind kind = Kind::epsilon;
  double epsilon = 1e-6;  // stabilizer, > 0
  double alpha = 2.0;     // alphabeta: positive weight, alpha - beta = 1, alpha >= 1
  double beta = 1.0;

  void validate() const {
    if (kind == Kind::epsilon) {
      if (!(epsilon > 0.0))
        throw ConfigError("epsilon rule needs epsilon > 0");
    } else {
      if (!(alpha >= 1.0) || std::abs((alpha - beta) - 1.0) > 1e-9)
        throw ConfigError("alphabeta rule needs alpha - beta = 1 and alpha >= 1");
    }
  }

  // "eps:1e-6" or "ab:2,1"
  static LrpRule parse(const std::string& text) {
    LrpRule r;
    auto colon = text.find(':');
    std::string name = colon == std::string::npos ? text : text.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto parse_double = [&](const std::string& s) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' in rule '" + text + "'");
      }
      if (used != s.size())
        throw ConfigError("bad number '" + s + "' in rule '" + text + "'");
      return v;
    };
    if (name == "eps") {
      r.kind = Kind::epsilon;
      if (!rest.empty()) r.epsilon = parse_double(rest);
    } else if (name == "ab") {
      r.kind = Kind::alphabeta;
      auto comma = rest.find(',');
      if (comma == std::string::npos)
        throw ConfigError("alphabeta rule needs 'ab:alpha,beta', got '" + text + "'");
      r.alpha = parse_double(rest.substr(0, comma));
      r.beta = parse_double(rest.substr(comma + 1));
    } else {
      throw ConfigError("unknown rule '" + text + "' (expected eps:... or ab:...)");
    }
    r.validate();
    return r;
  }

  std::string to_string() const {
    std::ostringstream os;
    if (kind == Kind::epsilon)
      os << "eps:" << epsilon;
    else
      os << "ab:" << alpha << "," << beta;
    return os.str();
  }
};

template <typename T>
struct RelevanceMapT {
  int layer_index = 0;
  TensorT<T> values;
};

using RelevanceMap = RelevanceMapT<float>;

// Maps ordered from the seed down to the input: R(L), R(L-1), ..., R(0).
template <typename T>
struct RelevanceTraceT {
  std::vector<RelevanceMapT<T>> maps;
  LrpRule rule;
  FilterPlan plan;

  const RelevanceMapT<T>& at_layer(int k) const {
    for (const auto& m : maps)
      if (m.layer_index == k) return m;
    throw ArgumentError("no relevance map recorded for layer " + std::to_string(k));
  }
};

using RelevanceTrace = RelevanceTraceT<float>;

// The seed is the logit vector masked to one class, so the relevance that
// flows backward sums to exactly that class's raw score.
template <typename T>
RelevanceMapT<T> seed_relevance(const TraceT<T>& trace, int class_index) {
  const int classes = trace.logits.shape[0];
  if (class_index < 0 || class_index >= classes)
    throw ArgumentError("class index " + std::to_string(class_index) +
                        " out of range 0.." + std::to_string(classes - 1));
  TensorT<T> seed(trace.logits.shape);
  seed.data[std::size_t(class_index)] = trace.logits.data[std::size_t(class_index)];
  return RelevanceMapT<T>{0, std::move(seed)};  // caller sets layer_index
}

namespace lrpdetail {

template <typename T>
inline T stabilized(T z, double eps) {
  // sign(0) counts as +1
  return z + T(z >= T(0) ? eps : -eps);
}

}  // namespace lrpdetail

// Dense layer redistribution.
// Epsilon rule: R_i = sum_j (x_i w_ij) / (z_j + eps*sign(z_j)) * R_j with
// z_j the full pre-activation including bias (biases absorb their share).
// AlphaBeta: positive and negative contributions split with weights a, -b.
template <typename T>
TensorT<T> relprop_dense(const TensorT<T>& r_out, const TensorT<T>& weights,
                         const TensorT<T>& bias, const TensorT<T>& x,
                         const LrpRule& rule) {
  rule.validate();
  if (weights.rank() != 2 || x.rank() != 1 || r_out.rank() != 1 ||
      weights.shape[0] != r_out.shape[0] || weights.shape[1] != x.shape[0])
    throw DimensionError("relprop_dense shape mismatch");
  const int out_n = weights.shape[0], in_n = weights.shape[1];
  TensorT<T> r_in({in_n});
  if (rule.kind == LrpRule::Kind::epsilon) {
    // s_j = R_j / stabilized(z_j); R_in = x .* (W^T s)
    TensorT<T> s({out_n});
    for (int j = 0; j < out_n; ++j) {
      T z = bias.data.empty() ? T(0) : bias.data[std::size_t(j)];
      const T* row = weights.data.data() + std::size_t(j) * in_n;
      for (int i = 0; i < in_n; ++i) z += row[i] * x.data[std::size_t(i)];
      s.data[std::size_t(j)] = r_out.data[std::size_t(j)] / lrpdetail::stabilized(z, rule.epsilon);
    }
    for (int j = 0; j < out_n; ++j) {
      const T sj = s.data[std::size_t(j)];
      const T* row = weights.data.data() + std::size_t(j) * in_n;
      for (int i = 0; i < in_n; ++i) r_in.data[std::size_t(i)] += row[i] * sj;
    }
    for (int i = 0; i < in_n; ++i) r_in.data[std::size_t(i)] *= x.data[std::size_t(i)];
  } else {
    // per-output positive/negative contribution sums, biases split by sign
    for (int j = 0; j < out_n; ++j) {
      const T* row = weights.data.data() + std::size_t(j) * in_n;
      T zp = T(0), zn = T(0);
      for (int i = 0; i < in_n; ++i) {
        T c = row[i] * x.data[std::size_t(i)];
        if (c > T(0)) zp += c; else zn += c;
      }
      if (!bias.data.empty()) {
        T b = bias.data[std::size_t(j)];
        if (b > T(0)) zp += b; else zn += b;
      }
      const T rj = r_out.data[std::size_t(j)];
      const T sp = zp > T(0) ? T(rule.alpha) * rj / zp : T(0);
      const T sn = zn < T(0) ? T(rule.beta) * rj / (-zn) : T(0);
      for (int i = 0; i < in_n; ++i) {
        T c = row[i] * x.data[std::size_t(i)];
        if (c > T(0))
          r_in.data[std::size_t(i)] += c * sp;
        else if (c < T(0))
          r_in.data[std::size_t(i)] += c * sn;  // c negative: subtracts beta share
      }
    }
  }
  return r_in;
}

// Convolution redistribution: the dense rule applied per output cell over
// its receptive field. Epsilon path runs as x .* col2im(K^T s) which is the
// exact unrolled-dense computation.
template <typename T>
TensorT<T> relprop_conv(const TensorT<T>& r_out, const TensorT<T>& kernels,
                        const TensorT<T>& bias, const TensorT<T>& x, int stride,
                        int pad, const LrpRule& rule) {
  rule.validate();
  if (x.rank() != 3 || kernels.rank() != 4 || r_out.rank() != 3)
    throw DimensionError("relprop_conv expects [C,H,W] maps and [O,C,k,k] kernels");
  const int o = kernels.shape[0];
  const int kh = kernels.shape[2], kw = kernels.shape[3];
  const int ckk = kernels.shape[1] * kh * kw;
  const int cells = r_out.shape[1] * r_out.shape[2];

  if (rule.kind == LrpRule::Kind::epsilon) {
    TensorT<T> z = conv2d(x, kernels, bias, stride, pad);
    if (z.shape != r_out.shape)
      throw DimensionError("relprop_conv relevance shape does not match layer output");
    TensorT<T> s = z.reshaped({o, cells});
    const T* rv = r_out.data.data();
    for (std::size_t i = 0; i < s.data.size(); ++i)
      s.data[i] = rv[i] / lrpdetail::stabilized(s.data[i], rule.epsilon);
    TensorT<T> kmat = kernels.reshaped({o, ckk});
    TensorT<T> cols = matmul(transpose(kmat), s);
    TensorT<T> back = col2im(cols, x.shape, kh, kw, stride, pad);
    return mul(back, x);
  }

  // alphabeta: split kernels and biases by sign, two backward passes
  TensorT<T> kpos(kernels.shape), kneg(kernels.shape);
  for (std::size_t i = 0; i < kernels.data.size(); ++i) {
    T w = kernels.data[i];
    kpos.data[i] = w > T(0) ? w : T(0);
    kneg.data[i] = w < T(0) ? w : T(0);
  }
  TensorT<T> bpos, bneg;
  if (!bias.data.empty()) {
    bpos = TensorT<T>(bias.shape);
    bneg = TensorT<T>(bias.shape);
    for (std::size_t i = 0; i < bias.data.size(); ++i) {
      T b = bias.data[i];
      bpos.data[i] = b > T(0) ? b : T(0);
      bneg.data[i] = b < T(0) ? b : T(0);
    }
  }
  // x is non-negative in these nets (inputs in [0,1], hidden post-ReLU), so
  // conv with sign-split kernels yields the signed contribution sums
  TensorT<T> zp = conv2d(x, kpos, bpos, stride, pad);
  TensorT<T> zn = conv2d(x, kneg, bneg, stride, pad);
  if (zp.shape != r_out.shape)
    throw DimensionError("relprop_conv relevance shape does not match layer output");
  TensorT<T> sp = zp.reshaped({o, cells});
  TensorT<T> sn = zn.reshaped({o, cells});
  const T* rv = r_out.data.data();
  for (std::size_t i = 0; i < sp.data.size(); ++i) {
    sp.data[i] = sp.data[i] > T(0) ? T(rule.alpha) * rv[i] / sp.data[i] : T(0);
    sn.data[i] = sn.data[i] < T(0) ? T(rule.beta) * rv[i] / (-sn.data[i]) : T(0);
  }
  TensorT<T> kmat_p = kpos.reshaped({o, ckk});
  TensorT<T> kmat_n = kneg.reshaped({o, ckk});
  TensorT<T> back_p = col2im(matmul(transpose(kmat_p), sp), x.shape, kh, kw, stride, pad);
  TensorT<T> back_n = col2im(matmul(transpose(kmat_n), sn), x.shape, kh, kw, stride, pad);
  return mul(add(back_p, back_n), x);
}

// Winner-take-all: each output cell's relevance lands on its recorded
// winner; overlapping windows accumulate.
template <typename T>
TensorT<T> relprop_maxpool(const TensorT<T>& r_out,
                           const std::vector<std::int32_t>& argmax,
                           const std::vector<int>& input_shape) {
  if (argmax.size() != r_out.numel())
    throw DimensionError("pool winners do not match the relevance map size");
  TensorT<T> r_in(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    std::size_t idx = std::size_t(argmax[i]);
    if (idx >= r_in.data.size())
      throw DimensionError("stale pool winner index " + std::to_string(argmax[i]));
    r_in.data[idx] += r_out.data[i];
  }
  return r_in;
}

template <typename T>
TensorT<T> relprop_relu(const TensorT<T>& r_out) {
  return r_out;  // pass-through; the next linear layer sees post-ReLU x
}

// Builds a plan that assigns one filter to every conv-layer input map.
template <typename T>
FilterPlan plan_all_conv_inputs(const ModelT<T>& model, const FilterSpec& spec) {
  FilterPlan plan;
  for (int k = 0; k < model.layer_count(); ++k)
    if (model.layers[std::size_t(k)].kind == LayerKind::conv)
      plan.sites[k] = spec;
  return plan;
}

// Indices of a model's conv layers in forward order.
template <typename T>
std::vector<int> conv_layer_indices(const ModelT<T>& model) {
  std::vector<int> out;
  for (int k = 0; k < model.layer_count(); ++k)
    if (model.layers[std::size_t(k)].kind == LayerKind::conv) out.push_back(k);
  return out;
}

// Full backward relevance pass. Seeds R(L) from the chosen class, walks the
// layers in reverse, applies the plan's filter for index k right after
// computing R(k), and records every (filtered) map from L down to 0.
template <typename T>
RelevanceTraceT<T> explain(const ModelT<T>& model, const TraceT<T>& trace,
                           int class_index, const LrpRule& rule,
                           const FilterPlan& plan) {
  rule.validate();
  const int L = model.layer_count();
  if (int(trace.inputs.size()) != L)
    throw DimensionError("activation trace does not match the model");
  for (const auto& [site, spec] : plan.sites) {
    if (site < 0 || site > L)
      throw ConfigError("filter plan references layer " + std::to_string(site) +
                        ", valid range is 0.." + std::to_string(L));
    spec.validate();
  }

  RelevanceTraceT<T> out;
  out.rule = rule;
  out.plan = plan;
  out.maps.reserve(std::size_t(L) + 1);

  RelevanceMapT<T> seed = seed_relevance(trace, class_index);
  seed.layer_index = L;
  if (const FilterSpec* f = plan.at(L)) seed.values = apply_filter(seed.values, *f);
  out.maps.push_back(seed);

  TensorT<T> r = out.maps.back().values;
  for (int k = L - 1; k >= 0; --k) {
    const LayerT<T>& layer = model.layers[std::size_t(k)];
    const TensorT<T>& x = trace.inputs[std::size_t(k)];
    switch (layer.kind) {
      case LayerKind::dense:
        r = relprop_dense(r, layer.weights, layer.bias, x, rule);
        break;
      case LayerKind::conv:
        r = relprop_conv(r, layer.weights, layer.bias, x, layer.stride, layer.pad,
                         rule);
        break;
      case LayerKind::maxpool:
        r = relprop_maxpool(r, trace.pool_argmax[std::size_t(k)], x.shape);
        break;
      case LayerKind::relu:
        r = relprop_relu(r);
        break;
      case LayerKind::flatten:
        r = r.reshaped(x.shape);
        break;
    }
    if (const FilterSpec* f = plan.at(k)) r = apply_filter(r, *f);
    if (!r.all_finite())
      throw Error("relevance at layer " + std::to_string(k) + " is not finite");
    out.maps.push_back(RelevanceMapT<T>{k, r});
  }
  return out;
}

// Channel-summed input relevance, normalized to [-1,1] by the maximum
// absolute value. An all-zero map stays all-zero.
template <typename T>
TensorT<T> heatmap_2d(const TensorT<T>& r0) {
  if (r0.rank() != 3)
    throw DimensionError("heatmap_2d expects a [C,H,W] input-layer map");
  const int c = r0.shape[0], h = r0.shape[1], w = r0.shape[2];
  TensorT<T> map({h, w});
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < h * w; ++i)
      map.data[std::size_t(i)] += r0.data[std::size_t(ci) * h * w + i];
  T m = r_max(map);
  if (m > T(0))
    for (auto& v : map.data) v /= m;
  return map;
}

// The 1/10 view: clip to one tenth of the maximum magnitude, then
// renormalize so low-amplitude structure becomes visible.
template <typename T>
TensorT<T> tenth_view(const TensorT<T>& heatmap) {
  T m = r_max(heatmap);
  if (m == T(0)) return heatmap;
  const T cap = T(0.1) * m;
  TensorT<T> out(heatmap.shape);
  for (std::size_t i = 0; i < heatmap.data.size(); ++i) {
    T v = heatmap.data[i];
    v = v > cap ? cap : (v < -cap ? -cap : v);
    out.data[i] = v / cap;
  }
  return out;
}

constexpr char kBundleMagic[8] = {'L', 'R', 'P', 'L', 'B', 'N', 'D', '1'};

// Relevance-trace bundle: magic, rule string, plan string, class index,
// map count, then per map: layer index, rank, extents, float32 values.
// Little endian throughout.
template <typename T>
std::vector<std::uint8_t> serialize_bundle(const RelevanceTraceT<T>& trace,
                                           int class_index) {
  std::vector<std::uint8_t> out;
  auto put_u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
  };
  auto put_str = [&](const std::string& s) {
    put_u32(std::uint32_t(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  };
  out.insert(out.end(), kBundleMagic, kBundleMagic + 8);
  put_str(trace.rule.to_string());
  put_str(trace.plan.to_string());
  put_u32(std::uint32_t(class_index));
  put_u32(std::uint32_t(trace.maps.size()));
  for (const auto& m : trace.maps) {
    put_u32(std::uint32_t(m.layer_index));
    put_u32(std::uint32_t(m.values.rank()));
    for (int e : m.values.shape) put_u32(std::uint32_t(e));
    for (T v : m.values.data) {
      float f = float(v);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(bits);
    }
  }
  return out;
}

struct BundleInfo {
  std::string rule;
  std::string plan;
  int class_index = 0;
  std::vector<RelevanceMap> maps;
};

inline BundleInfo parse_bundle(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError("trace bundle truncated");
  };
  auto get_u32 = [&]() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + i]) << (8 * i);
    pos += 4;
    return v;
  };
  auto get_str = [&]() {
    std::uint32_t n = get_u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  };
  need(8);
  if (std::memcmp(bytes.data(), kBundleMagic, 8) != 0)
    throw FormatError("not a relevance trace bundle (bad magic)");
  pos = 8;
  BundleInfo info;
  info.rule = get_str();
  info.plan = get_str();
  info.class_index = int(get_u32());
  std::uint32_t count = get_u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    RelevanceMap m;
    m.layer_index = int(get_u32());
    std::uint32_t rank = get_u32();
    if (rank > 8) throw FormatError("implausible tensor rank in bundle");
    std::vector<int> shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(int(get_u32()));
    TensorT<float> values(shape);
    for (auto& v : values.data) {
      std::uint32_t bits = get_u32();
      std::memcpy(&v, &bits, 4);
    }
    m.values = std::move(values);
    info.maps.push_back(std::move(m));
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes in trace bundle");
  return info;
}

template <typename T>
void save_bundle(const std::filesystem::path& path, const RelevanceTraceT<T>& trace,
                 int class_index) {
  auto bytes = serialize_bundle(trace, class_index);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write trace bundle " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

inline BundleInfo load_bundle(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open trace bundle " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return parse_bundle(bytes);
}

}  // namespace lrplab
