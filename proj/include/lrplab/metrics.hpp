#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lrplab/errors.hpp"
#include "lrplab/filters.hpp"
#include "lrplab/lrp.hpp"
#include "lrplab/nn.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab {

// Threshold policy for the spikiness metric. Relative thresholds resolve
// against the maximum of the part being measured, which keeps the metric
// insensitive to the map's absolute amplitude.
struct TPolicy {
  bool relative = true;
  double value = 0.1;

  void validate() const {
    if (relative) {
      if (!(value > 0.0 && value <= 1.0))
        throw ConfigError("relative threshold must be in (0,1], got " +
                          std::to_string(value));
    } else if (!(value >= 0.0)) {
      throw ConfigError("absolute threshold must be >= 0");
    }
  }

  double resolve(double part_max) const { return relative ? value * part_max : value; }

  // "rel:0.1" or "abs:0.25"
  static TPolicy parse(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
      throw ConfigError("unparseable threshold policy '" + text + "'");
    std::string name = text.substr(0, colon);
    std::string rest = text.substr(colon + 1);
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(rest, &used);
    } catch (const std::exception&) {
      throw ConfigError("bad number in threshold policy '" + text + "'");
    }
    if (used != rest.size())
      throw ConfigError("bad number in threshold policy '" + text + "'");
    TPolicy p;
    if (name == "rel")
      p = TPolicy{true, v};
    else if (name == "abs")
      p = TPolicy{false, v};
    else
      throw ConfigError("unknown threshold policy '" + name + "'");
    p.validate();
    return p;
  }

  std::string to_string() const {
    std::ostringstream os;
    os << (relative ? "rel:" : "abs:") << value;
    return os.str();
  }
};

// Spikiness of one relevance map. Components can be undefined (empty
// strength sets or a zero lower strength); undefined is a value here, not
// an error, so batch code can count and skip.
struct MpReport {
  int layer_index = 0;
  double t_plus = 0.0;
  double t_minus = 0.0;
  std::optional<double> mp_plus;
  std::optional<double> mp_minus;
  std::optional<double> mp;
};

namespace mdetail {

inline std::optional<double> upper_mean(const std::vector<double>& x, double t) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : x)
    if (v >= t) {
      sum += v;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / double(n);
}

inline std::optional<double> lower_mean(const std::vector<double>& x, double t) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : x)
    if (v < t) {
      sum += v;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / double(n);
}

}  // namespace mdetail

// Mean of the values >= t. The input must be non-negative (it is one part
// of a split map); an empty selection is undefined.
template <typename T>
std::optional<double> upper_strength(const TensorT<T>& x, double t) {
  std::vector<double> v;
  v.reserve(x.data.size());
  for (T e : x.data) {
    if (e < T(0)) throw ArgumentError("upper_strength input must be non-negative");
    v.push_back(double(e));
  }
  return mdetail::upper_mean(v, t);
}

// Mean of the values strictly below t; undefined when none are.
template <typename T>
std::optional<double> lower_strength(const TensorT<T>& x, double t) {
  std::vector<double> v;
  v.reserve(x.data.size());
  for (T e : x.data) {
    if (e < T(0)) throw ArgumentError("lower_strength input must be non-negative");
    v.push_back(double(e));
  }
  return mdetail::lower_mean(v, t);
}

// Mean Power of a relevance map. The map splits into a positive part and
// the magnitude of its negative part (zeros stay in both); each part gets
// its own resolved threshold and an upper/lower strength ratio. The scalar
// mp is the mean of whichever component ratios are defined.
template <typename T>
MpReport mean_power(const TensorT<T>& map, const TPolicy& policy,
                    int layer_index = 0) {
  policy.validate();
  std::vector<double> plus(map.data.size()), minus(map.data.size());
  double max_plus = 0.0, max_minus = 0.0;
  for (std::size_t i = 0; i < map.data.size(); ++i) {
    double v = double(map.data[i]);
    plus[i] = v > 0.0 ? v : 0.0;
    minus[i] = v < 0.0 ? -v : 0.0;
    max_plus = std::max(max_plus, plus[i]);
    max_minus = std::max(max_minus, minus[i]);
  }
  MpReport rep;
  rep.layer_index = layer_index;
  rep.t_plus = policy.resolve(max_plus);
  rep.t_minus = policy.resolve(max_minus);
  auto ratio = [](const std::vector<double>& part, double t) -> std::optional<double> {
    auto u = mdetail::upper_mean(part, t);
    auto l = mdetail::lower_mean(part, t);
    if (!u || !l || *l == 0.0) return std::nullopt;
    return *u / *l;
  };
  rep.mp_plus = ratio(plus, rep.t_plus);
  rep.mp_minus = ratio(minus, rep.t_minus);
  if (rep.mp_plus && rep.mp_minus)
    rep.mp = 0.5 * (*rep.mp_plus + *rep.mp_minus);
  else if (rep.mp_plus)
    rep.mp = rep.mp_plus;
  else if (rep.mp_minus)
    rep.mp = rep.mp_minus;
  return rep;
}

// Per-layer aggregate over a sample batch. Means cover only the samples
// where the component was defined; the undefined counts say how many were
// skipped.
struct MpBatchRow {
  int layer_index = 0;
  int n_samples = 0;
  std::optional<double> mp_plus;
  std::optional<double> mp_minus;
  std::optional<double> mp;
  int undefined_plus = 0;
  int undefined_minus = 0;
  int undefined_mp = 0;
};

// Default tracked layers: the first four convolution layers (fewer if the
// model has fewer).
template <typename T>
std::vector<int> default_tracked_layers(const ModelT<T>& model) {
  std::vector<int> layers = conv_layer_indices(model);
  if (layers.size() > 4) layers.resize(4);
  return layers;
}

// Explains every sample with an unfiltered pass and measures spikiness of
// the relevance maps entering the requested layers.
template <typename T>
std::vector<MpBatchRow> mp_batch(const ModelT<T>& model,
                                 const std::vector<TensorT<T>>& samples,
                                 std::vector<int> layers, const LrpRule& rule,
                                 const TPolicy& policy) {
  if (layers.empty()) layers = default_tracked_layers(model);
  for (int k : layers) {
    if (k < 0 || k >= model.layer_count())
      throw ArgumentError("tracked layer " + std::to_string(k) + " out of range");
    if (model.layers[std::size_t(k)].kind != LayerKind::conv)
      throw ArgumentError("tracked layer " + std::to_string(k) +
                          " is not a convolution layer");
  }
  struct Acc {
    double sum_plus = 0, sum_minus = 0, sum_mp = 0;
    int n_plus = 0, n_minus = 0, n_mp = 0;
  };
  std::vector<Acc> acc(layers.size());
  for (const auto& x : samples) {
    auto trace = forward_with_trace(model, x);
    auto rel = explain(model, trace, trace.predicted_class(), rule,
                       FilterPlan::identity());
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const auto& map = rel.at_layer(layers[li]).values;
      MpReport rep = mean_power(map, policy, layers[li]);
      if (rep.mp_plus) {
        acc[li].sum_plus += *rep.mp_plus;
        ++acc[li].n_plus;
      }
      if (rep.mp_minus) {
        acc[li].sum_minus += *rep.mp_minus;
        ++acc[li].n_minus;
      }
      if (rep.mp) {
        acc[li].sum_mp += *rep.mp;
        ++acc[li].n_mp;
      }
    }
  }
  std::vector<MpBatchRow> rows;
  const int n = int(samples.size());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    MpBatchRow row;
    row.layer_index = layers[li];
    row.n_samples = n;
    if (acc[li].n_plus > 0) row.mp_plus = acc[li].sum_plus / acc[li].n_plus;
    if (acc[li].n_minus > 0) row.mp_minus = acc[li].sum_minus / acc[li].n_minus;
    if (acc[li].n_mp > 0) row.mp = acc[li].sum_mp / acc[li].n_mp;
    row.undefined_plus = n - acc[li].n_plus;
    row.undefined_minus = n - acc[li].n_minus;
    row.undefined_mp = n - acc[li].n_mp;
    rows.push_back(row);
  }
  return rows;
}

// Total absolute difference between a reference map and an observation.
template <typename T>
double sum_error(const TensorT<T>& g_ref, const TensorT<T>& g_obs) {
  require_same_shape(g_ref, g_obs, "sum_error");
  double se = 0.0;
  for (std::size_t i = 0; i < g_ref.data.size(); ++i)
    se += std::abs(double(g_ref.data[i]) - double(g_obs.data[i]));
  return se;
}

template <typename T>
double mae(const TensorT<T>& g_ref, const TensorT<T>& g_obs) {
  return sum_error(g_ref, g_obs) / double(g_ref.numel());
}

// Error split by observation amplitude: the strong-pixel region holds the
// observation pixels at or above alpha times its own maximum, and the two
// regional error sums partition the total exactly.
struct ErrorDecomposition {
  double alpha = 0.0;
  double p_alpha = 0.0;
  std::size_t size_U = 0;
  std::size_t size_U_alpha = 0;
  std::size_t size_U_delta_alpha = 0;
  double se = 0.0;
  double se_alpha = 0.0;        // error over the weak-pixel region
  double se_delta_alpha = 0.0;  // error over the strong-pixel region
  double mae = 0.0;
  double mean_abs_g = 0.0;  // mean |g_ref|
  std::optional<double> max_allowed;  // absent: these nets have no output cap
};

template <typename T>
ErrorDecomposition decompose_error(const TensorT<T>& g_ref, const TensorT<T>& g_obs,
                                   double alpha) {
  require_same_shape(g_ref, g_obs, "decompose_error");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ArgumentError("alpha must be in (0,1], got " + std::to_string(alpha));
  ErrorDecomposition d;
  d.alpha = alpha;
  d.size_U = g_ref.numel();
  const double m = double(r_max(g_obs));
  const double threshold = alpha * m;
  double abs_ref = 0.0;
  for (std::size_t i = 0; i < g_ref.data.size(); ++i) {
    const double err = std::abs(double(g_ref.data[i]) - double(g_obs.data[i]));
    abs_ref += std::abs(double(g_ref.data[i]));
    if (std::abs(double(g_obs.data[i])) >= threshold) {
      ++d.size_U_delta_alpha;
      d.se_delta_alpha += err;
    } else {
      ++d.size_U_alpha;
      d.se_alpha += err;
    }
  }
  d.se = d.se_alpha + d.se_delta_alpha;
  d.p_alpha = double(d.size_U_delta_alpha) / double(d.size_U);
  d.mae = d.se / double(d.size_U);
  d.mean_abs_g = abs_ref / double(d.size_U);
  return d;
}

struct ClampBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

// Bound on the strong-region error a clamp introduces: with the clamped
// magnitude pinned to alpha * r_max on that region, the pointwise triangle
// inequality gives |g_ref - clamped| <= |g_ref| + alpha * r_max, so the
// weighted means must satisfy lhs <= rhs no matter what maps come in.
template <typename T>
ClampBoundCheck check_clamp_bound(const TensorT<T>& g_ref, const TensorT<T>& g_obs,
                                  double alpha) {
  require_same_shape(g_ref, g_obs, "check_clamp_bound");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ArgumentError("alpha must be in (0,1], got " + std::to_string(alpha));
  const double m = double(r_max(g_obs));
  const double threshold = alpha * m;
  double sum_delta = 0.0, sum_ref = 0.0;
  std::size_t n_strong = 0;
  for (std::size_t i = 0; i < g_ref.data.size(); ++i) {
    const double obs = double(g_obs.data[i]);
    if (std::abs(obs) < threshold) continue;
    const double clamped = obs < 0.0 ? -threshold : threshold;
    sum_delta += std::abs(double(g_ref.data[i]) - clamped);
    sum_ref += std::abs(double(g_ref.data[i]));
    ++n_strong;
  }
  ClampBoundCheck out;
  if (n_strong == 0) return out;  // empty strong region: 0 <= 0
  const double p = double(n_strong) / double(g_ref.numel());
  out.lhs = p * (sum_delta / double(n_strong));
  out.rhs = p * (sum_ref / double(n_strong) + threshold);
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

// Binary footprint of a sample: one wherever the pixel has any ink.
struct GroundtruthMask {
  TensorT<float> mask;  // [H,W], values 0 or 1
};

template <typename T>
GroundtruthMask groundtruth_mask(const TensorT<T>& image) {
  if (image.rank() != 3 || image.shape[0] != 1)
    throw DimensionError("groundtruth_mask expects a [1,H,W] grayscale image");
  GroundtruthMask out;
  out.mask = TensorT<float>({image.shape[1], image.shape[2]});
  for (std::size_t i = 0; i < out.mask.data.size(); ++i)
    out.mask.data[i] = image.data[i] > T(0) ? 1.0f : 0.0f;
  return out;
}

// Mean heatmap magnitude off the digit footprint; zero when the mask
// covers everything.
template <typename T>
double masked_noise_score(const TensorT<T>& heatmap, const GroundtruthMask& gt) {
  if (heatmap.shape != gt.mask.shape)
    throw DimensionError("masked_noise_score shape mismatch: heatmap " +
                         shape_string(heatmap.shape) + " vs mask " +
                         shape_string(gt.mask.shape));
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < heatmap.data.size(); ++i) {
    if (gt.mask.data[i] != 0.0f) continue;
    sum += std::abs(double(heatmap.data[i]));
    ++n;
  }
  return n == 0 ? 0.0 : sum / double(n);
}

// Two-term error estimate: a linearization term over the weak region plus
// an amplitude-difference term over the strong region, both scaled by the
// rendering view factor.
inline double two_term_mae_estimate(double p_alpha, double view_scale,
                                    double linear_err, double delta_intensity) {
  if (p_alpha < 0.0 || p_alpha > 1.0)
    throw ArgumentError("p_alpha must be in [0,1]");
  if (!(view_scale > 0.0 && view_scale <= 1.0))
    throw ArgumentError("view_scale must be in (0,1]");
  if (linear_err < 0.0 || delta_intensity < 0.0)
    throw ArgumentError("error terms must be non-negative");
  return (1.0 - p_alpha) * view_scale * linear_err +
         p_alpha * view_scale * delta_intensity;
}

}  // namespace lrplab
