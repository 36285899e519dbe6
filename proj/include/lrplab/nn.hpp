#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"
#include "lrplab/mnist.hpp"
#include "lrplab/rng.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab {

enum class LayerKind { conv, relu, maxpool, flatten, dense };

inline const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

template <typename T>
struct LayerT {
  LayerKind kind;
  int out_channels = 0, ksize = 0, stride = 1, pad = 0;  // conv
  int pool_size = 0, pool_stride = 0;                    // maxpool
  int out_features = 0;                                  // dense
  TensorT<T> weights;  // conv [O,C,k,k], dense [out,in]
  TensorT<T> bias;     // [O] / [out]

  bool has_params() const {
    return kind == LayerKind::conv || kind == LayerKind::dense;
  }
};

template <typename T>
struct ModelT {
  std::string recipe;                       // normalized recipe text
  std::vector<int> input_shape;             // {C,H,W}
  std::vector<LayerT<T>> layers;
  std::vector<std::vector<int>> io_shapes;  // io_shapes[k] = shape into layer k; back() = output

  int layer_count() const { return int(layers.size()); }
};

using Model = ModelT<float>;

// Parses the layer recipe text. One directive per line:
//   input C H W | conv OUT K STRIDE PAD | relu | maxpool SIZE STRIDE |
//   flatten | dense OUT
// '#' starts a comment. Shapes are composed and validated; parameters are
// left empty (see init_params).
template <typename T>
ModelT<T> parse_recipe(const std::string& text) {
  ModelT<T> model;
  std::vector<std::string> normalized;
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  bool have_input = false;
  std::vector<int> shape;
  auto fail = [&](const std::string& msg) {
    throw ConfigError("recipe line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(stream, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<long> args;
    long v;
    while (ls >> v) args.push_back(v);
    std::string trailing;
    if (ls.clear(), ls >> trailing; !trailing.empty())
      fail("unexpected token '" + trailing + "'");

    if (word == "input") {
      if (have_input) fail("duplicate input directive");
      if (args.size() != 3) fail("input needs C H W");
      shape = {int(args[0]), int(args[1]), int(args[2])};
      for (int e : shape)
        if (e <= 0) fail("non-positive input extent");
      model.input_shape = shape;
      have_input = true;
      normalized.push_back("input " + std::to_string(shape[0]) + " " +
                           std::to_string(shape[1]) + " " + std::to_string(shape[2]));
      continue;
    }
    if (!have_input) fail("first directive must be input");

    LayerT<T> layer;
    if (word == "conv") {
      if (args.size() != 4) fail("conv needs OUT K STRIDE PAD");
      layer.kind = LayerKind::conv;
      layer.out_channels = int(args[0]);
      layer.ksize = int(args[1]);
      layer.stride = int(args[2]);
      layer.pad = int(args[3]);
      if (layer.out_channels <= 0 || layer.ksize <= 0 || layer.stride <= 0 ||
          layer.pad < 0)
        fail("conv arguments out of range");
      if (shape.size() != 3) fail("conv after flatten");
      int oh, ow;
      try {
        oh = conv_out_extent(shape[1], layer.ksize, layer.stride, layer.pad);
        ow = conv_out_extent(shape[2], layer.ksize, layer.stride, layer.pad);
      } catch (const Error& e) {
        fail(e.what());
        return model;  // unreachable
      }
      shape = {layer.out_channels, oh, ow};
    } else if (word == "relu") {
      if (!args.empty()) fail("relu takes no arguments");
      layer.kind = LayerKind::relu;
    } else if (word == "maxpool") {
      if (args.size() != 2) fail("maxpool needs SIZE STRIDE");
      layer.kind = LayerKind::maxpool;
      layer.pool_size = int(args[0]);
      layer.pool_stride = int(args[1]);
      if (layer.pool_size <= 0 || layer.pool_stride <= 0)
        fail("maxpool arguments out of range");
      if (shape.size() != 3) fail("maxpool after flatten");
      int oh, ow;
      try {
        oh = conv_out_extent(shape[1], layer.pool_size, layer.pool_stride, 0);
        ow = conv_out_extent(shape[2], layer.pool_size, layer.pool_stride, 0);
      } catch (const Error& e) {
        fail(e.what());
        return model;  // unreachable
      }
      shape = {shape[0], oh, ow};
    } else if (word == "flatten") {
      if (!args.empty()) fail("flatten takes no arguments");
      if (shape.size() != 3) fail("flatten needs a [C,H,W] input");
      layer.kind = LayerKind::flatten;
      shape = {shape[0] * shape[1] * shape[2]};
    } else if (word == "dense") {
      if (args.size() != 1) fail("dense needs OUT");
      layer.kind = LayerKind::dense;
      layer.out_features = int(args[0]);
      if (layer.out_features <= 0) fail("dense size out of range");
      if (shape.size() != 1) fail("dense needs a flat input (add flatten)");
      shape = {layer.out_features};
    } else {
      fail("unknown directive '" + word + "'");
    }
    model.layers.push_back(layer);
    normalized.push_back(line.substr(line.find_first_not_of(" \t")));
  }
  if (!have_input) throw ConfigError("recipe has no input directive");
  if (model.layers.empty()) throw ConfigError("recipe has no layers");

  // io_shapes[k] = shape entering layer k; one extra entry for the output

  std::vector<int> cur = model.input_shape;
  for (const auto& layer : model.layers) {
    model.io_shapes.push_back(cur);
    switch (layer.kind) {
      case LayerKind::conv:
        cur = {layer.out_channels,
               conv_out_extent(cur[1], layer.ksize, layer.stride, layer.pad),
               conv_out_extent(cur[2], layer.ksize, layer.stride, layer.pad)};
        break;
      case LayerKind::relu:
        break;
      case LayerKind::maxpool:
        cur = {cur[0], conv_out_extent(cur[1], layer.pool_size, layer.pool_stride, 0),
               conv_out_extent(cur[2], layer.pool_size, layer.pool_stride, 0)};
        break;
      case LayerKind::flatten:
        cur = {cur[0] * cur[1] * cur[2]};
        break;
      case LayerKind::dense:
        cur = {layer.out_features};
        break;
    }
  }
  model.io_shapes.push_back(cur);

  std::string norm_text;
  for (const auto& l : normalized) norm_text += l + "\n";
  model.recipe = norm_text;
  return model;
}

// Kaiming fan-in initialization, zero biases. Per-layer seeds are derived
// from the base seed so adding a layer does not shift the others.
template <typename T>
void init_params(ModelT<T>& model, std::uint64_t seed) {
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    LayerT<T>& layer = model.layers[k];
    const std::vector<int>& in_shape = model.io_shapes[k];
    if (layer.kind == LayerKind::conv) {
      int in_ch = in_shape[0];
      int fan_in = in_ch * layer.ksize * layer.ksize;
      Rng rng(derive_seed(seed, 0x1a7e5, k));
      double stddev = std::sqrt(2.0 / fan_in);
      layer.weights = TensorT<T>({layer.out_channels, in_ch, layer.ksize, layer.ksize});
      for (auto& w : layer.weights.data) w = T(rng.normal(0.0, stddev));
      layer.bias = TensorT<T>({layer.out_channels});
    } else if (layer.kind == LayerKind::dense) {
      int fan_in = in_shape[0];
      Rng rng(derive_seed(seed, 0x1a7e5, k));
      double stddev = std::sqrt(2.0 / fan_in);
      layer.weights = TensorT<T>({layer.out_features, fan_in});
      for (auto& w : layer.weights.data) w = T(rng.normal(0.0, stddev));
      layer.bias = TensorT<T>({layer.out_features});
    }
  }
}

template <typename T>
ModelT<T> build_model(const std::string& recipe, std::uint64_t seed) {
  ModelT<T> model = parse_recipe<T>(recipe);
  init_params(model, seed);
  return model;
}

template <typename T>
std::size_t count_params(const ModelT<T>& model) {
  std::size_t n = 0;
  for (const auto& layer : model.layers)
    n += layer.weights.numel() + layer.bias.numel();
  return n;
}

// Activations recorded on the way forward: the input to every layer plus
// the final logits, so trace length is layer count + 1. Pool layers also
// record their winners for exact replay on the way back.
template <typename T>
struct TraceT {
  std::vector<TensorT<T>> inputs;
  TensorT<T> logits;
  std::vector<std::vector<std::int32_t>> pool_argmax;  // parallel to layers

  int predicted_class() const {
    int best = 0;
    for (int i = 1; i < logits.shape[0]; ++i)
      if (logits.data[std::size_t(i)] > logits.data[std::size_t(best)]) best = i;
    return best;
  }
};

using Trace = TraceT<float>;

template <typename T>
TensorT<T> apply_layer(const LayerT<T>& layer, const TensorT<T>& x,
                       std::vector<std::int32_t>* argmax_out) {
  switch (layer.kind) {
    case LayerKind::conv:
      return conv2d(x, layer.weights, layer.bias, layer.stride, layer.pad);
    case LayerKind::relu:
      return relu(x);
    case LayerKind::maxpool: {
      auto res = maxpool2d(x, layer.pool_size, layer.pool_stride);
      if (argmax_out) *argmax_out = std::move(res.argmax);
      return std::move(res.output);
    }
    case LayerKind::flatten:
      return x.reshaped({int(x.numel())});
    case LayerKind::dense: {
      TensorT<T> out = matmul(layer.weights, x.reshaped({x.shape[0], 1}))
                           .reshaped({layer.out_features});
      for (int i = 0; i < layer.out_features; ++i)
        out.data[std::size_t(i)] += layer.bias.data[std::size_t(i)];
      return out;
    }
  }
  throw Error("unreachable layer kind");
}

template <typename T>
TensorT<T> forward(const ModelT<T>& model, const TensorT<T>& x) {
  if (x.shape != model.input_shape)
    throw DimensionError("input shape " + shape_string(x.shape) +
                         " does not match model input " +
                         shape_string(model.input_shape));
  TensorT<T> cur = x;
  for (const auto& layer : model.layers) cur = apply_layer(layer, cur, nullptr);
  return cur;
}

template <typename T>
TraceT<T> forward_with_trace(const ModelT<T>& model, const TensorT<T>& x) {
  if (x.shape != model.input_shape)
    throw DimensionError("input shape " + shape_string(x.shape) +
                         " does not match model input " +
                         shape_string(model.input_shape));
  TraceT<T> trace;
  trace.pool_argmax.resize(model.layers.size());
  TensorT<T> cur = x;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    trace.inputs.push_back(cur);
    cur = apply_layer(model.layers[k], cur, &trace.pool_argmax[k]);
  }
  trace.logits = std::move(cur);
  return trace;
}

template <typename T>
std::vector<double> softmax(const TensorT<T>& logits) {
  double maxv = -1e300;
  for (T v : logits.data) maxv = std::max(maxv, double(v));
  std::vector<double> p(logits.data.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(double(logits.data[i]) - maxv);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

// Per-layer parameter gradients; empty tensors for parameterless layers.
template <typename T>
struct GradsT {
  std::vector<TensorT<T>> weights, bias;
};

template <typename T>
GradsT<T> zero_grads(const ModelT<T>& model) {
  GradsT<T> g;
  g.weights.resize(model.layers.size());
  g.bias.resize(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (model.layers[k].has_params()) {
      g.weights[k] = TensorT<T>(model.layers[k].weights.shape);
      g.bias[k] = TensorT<T>(model.layers[k].bias.shape);
    }
  }
  return g;
}

// Softmax cross entropy on one traced sample; accumulates scale * dLoss/dtheta
// into grads and returns the loss. Backprop retraces the layers in reverse
// using the stored inputs and pool winners.
template <typename T>
double loss_and_accumulate_grads(const ModelT<T>& model, const TraceT<T>& trace,
                                 int label, GradsT<T>& grads, double scale) {
  const int classes = trace.logits.shape[0];
  if (label < 0 || label >= classes)
    throw ArgumentError("label " + std::to_string(label) + " out of range");
  std::vector<double> prob = softmax(trace.logits);
  double loss = -std::log(std::max(prob[std::size_t(label)], 1e-300));

  TensorT<T> delta(trace.logits.shape);
  for (int i = 0; i < classes; ++i)
    delta.data[std::size_t(i)] = T((prob[std::size_t(i)] - (i == label ? 1.0 : 0.0)));

  for (int k = model.layer_count() - 1; k >= 0; --k) {
    const LayerT<T>& layer = model.layers[std::size_t(k)];
    const TensorT<T>& x = trace.inputs[std::size_t(k)];
    switch (layer.kind) {
      case LayerKind::dense: {
        // dW[j,i] += scale * delta[j] * x[i]; db += scale * delta; dx = W^T delta
        const int out_n = layer.out_features, in_n = x.shape[0];
        TensorT<T>& gw = grads.weights[std::size_t(k)];
        TensorT<T>& gb = grads.bias[std::size_t(k)];
        for (int j = 0; j < out_n; ++j) {
          T dj = delta.data[std::size_t(j)] * T(scale);
          gb.data[std::size_t(j)] += dj;
          const T* xrow = x.data.data();
          T* grow = gw.data.data() + std::size_t(j) * in_n;
          for (int i = 0; i < in_n; ++i) grow[i] += dj * xrow[i];
        }
        delta = matmul(transpose(layer.weights), delta.reshaped({out_n, 1}))
                    .reshaped({in_n});
        break;
      }
      case LayerKind::conv: {
        const std::vector<int>& in_shape = x.shape;
        const int o = layer.out_channels;
        const int ckk = in_shape[0] * layer.ksize * layer.ksize;
        TensorT<T> cols = im2col(x, layer.ksize, layer.ksize, layer.stride, layer.pad);
        TensorT<T> delta_mat = delta.reshaped({o, int(delta.numel()) / o});
        // parameter gradients
        TensorT<T> dk = matmul(delta_mat, transpose(cols));
        TensorT<T>& gw = grads.weights[std::size_t(k)];
        for (std::size_t i = 0; i < gw.data.size(); ++i)
          gw.data[i] += T(scale) * dk.data[i];
        TensorT<T>& gb = grads.bias[std::size_t(k)];
        const int cells = delta_mat.shape[1];
        for (int oc = 0; oc < o; ++oc) {
          T acc = T(0);
          const T* row = delta_mat.data.data() + std::size_t(oc) * cells;
          for (int i = 0; i < cells; ++i) acc += row[i];
          gb.data[std::size_t(oc)] += T(scale) * acc;
        }
        // input gradient
        TensorT<T> kmat = layer.weights.reshaped({o, ckk});
        TensorT<T> dcols = matmul(transpose(kmat), delta_mat);
        delta = col2im(dcols, in_shape, layer.ksize, layer.ksize, layer.stride,
                       layer.pad);
        break;
      }
      case LayerKind::relu: {
        TensorT<T> dx(x.shape);
        for (std::size_t i = 0; i < x.data.size(); ++i)
          dx.data[i] = x.data[i] > T(0) ? delta.data[i] : T(0);
        delta = std::move(dx);
        break;
      }
      case LayerKind::maxpool: {
        TensorT<T> dx(x.shape);
        const auto& winners = trace.pool_argmax[std::size_t(k)];
        for (std::size_t i = 0; i < winners.size(); ++i)
          dx.data[std::size_t(winners[i])] += delta.data[i];
        delta = std::move(dx);
        break;
      }
      case LayerKind::flatten: {
        delta = delta.reshaped(x.shape);
        break;
      }
    }
  }
  return loss;
}

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamStateT {
  std::int64_t t = 0;
  std::vector<TensorT<T>> mw, vw, mb, vb;
};

template <typename T>
AdamStateT<T> adam_init(const ModelT<T>& model) {
  AdamStateT<T> s;
  s.mw.resize(model.layers.size());
  s.vw.resize(model.layers.size());
  s.mb.resize(model.layers.size());
  s.vb.resize(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (model.layers[k].has_params()) {
      s.mw[k] = TensorT<T>(model.layers[k].weights.shape);
      s.vw[k] = TensorT<T>(model.layers[k].weights.shape);
      s.mb[k] = TensorT<T>(model.layers[k].bias.shape);
      s.vb[k] = TensorT<T>(model.layers[k].bias.shape);
    }
  }
  return s;
}

template <typename T>
void adam_step(ModelT<T>& model, const GradsT<T>& grads, AdamStateT<T>& state,
               const AdamConfig& cfg) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  auto update = [&](TensorT<T>& param, const TensorT<T>& grad, TensorT<T>& m,
                    TensorT<T>& v) {
    for (std::size_t i = 0; i < param.data.size(); ++i) {
      double g = double(grad.data[i]);
      double mi = cfg.beta1 * double(m.data[i]) + (1.0 - cfg.beta1) * g;
      double vi = cfg.beta2 * double(v.data[i]) + (1.0 - cfg.beta2) * g * g;
      m.data[i] = T(mi);
      v.data[i] = T(vi);
      double mhat = mi / bc1, vhat = vi / bc2;
      param.data[i] = T(double(param.data[i]) -
                        cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  };
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    if (!model.layers[k].has_params()) continue;
    update(model.layers[k].weights, grads.weights[k], state.mw[k], state.vw[k]);
    update(model.layers[k].bias, grads.bias[k], state.mb[k], state.vb[k]);
  }
}

// One optimizer step on a batch of samples: mean loss, mean gradients.
template <typename T>
double train_step(ModelT<T>& model, const std::vector<const TensorT<T>*>& images,
                  const std::vector<int>& labels, AdamStateT<T>& state,
                  const AdamConfig& cfg) {
  if (images.empty() || images.size() != labels.size())
    throw ArgumentError("train_step needs matching nonempty images/labels");
  GradsT<T> grads = zero_grads(model);
  double loss = 0.0;
  const double scale = 1.0 / double(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    TraceT<T> trace = forward_with_trace(model, *images[i]);
    loss += scale * loss_and_accumulate_grads(model, trace, labels[i], grads, scale);
  }
  adam_step(model, grads, state, cfg);
  return loss;
}

template <typename T>
double evaluate_accuracy(const ModelT<T>& model, const Dataset& data,
                         const std::vector<int>& indices, bool enlarge = false) {
  if (indices.empty()) throw ArgumentError("evaluate_accuracy needs indices");
  int hits = 0;
  for (int idx : indices) {
    const Tensor& raw = data.images[std::size_t(idx)];
    TensorT<T> x = enlarge ? enlarge_image(raw).template cast<T>()
                           : raw.template cast<T>();
    TensorT<T> logits = forward(model, x);
    int best = 0;
    for (int i = 1; i < logits.shape[0]; ++i)
      if (logits.data[std::size_t(i)] > logits.data[std::size_t(best)]) best = i;
    if (best == data.labels[std::size_t(idx)]) ++hits;
  }
  return double(hits) / double(indices.size());
}

}  // namespace lrplab
