#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "lrplab/errors.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab {

// One rectification filter. All thresholds are fractions of the map's own
// maximum absolute value, so filters are scale equivariant.
struct FilterSpec {
  enum class Kind { identity, clamp, fraction_pass, amplify };

  Kind kind = Kind::identity;
  double alpha = 0.0;  // threshold fraction, in (0,1] for thresholded kinds
  double amp = 1.0;    // amplification factor, > 0
  bool zero_kill_name = false;  // parsed via the "zero:" alias

  void validate() const {
    if (kind == Kind::identity) return;
    if (!(alpha > 0.0 && alpha <= 1.0))
      throw ConfigError("filter alpha must be in (0,1], got " + std::to_string(alpha));
    if (kind == Kind::amplify && !(amp > 0.0))
      throw ConfigError("amplifier factor must be > 0, got " + std::to_string(amp));
  }

  // String forms: identity | clamp:0.2 | pass:0.05 | zero:0.05 | amp:0.7x2.0
  static FilterSpec parse(const std::string& text) {
    FilterSpec f;
    if (text == "identity") return f;
    auto colon = text.find(':');
    if (colon == std::string::npos)
      throw ConfigError("unparseable filter '" + text + "'");
    std::string name = text.substr(0, colon);
    std::string rest = text.substr(colon + 1);
    auto parse_double = [&](const std::string& s) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' in filter '" + text + "'");
      }
      if (used != s.size())
        throw ConfigError("bad number '" + s + "' in filter '" + text + "'");
      return v;
    };
    if (name == "clamp") {
      f.kind = Kind::clamp;
      f.alpha = parse_double(rest);
    } else if (name == "pass" || name == "zero") {
      f.kind = Kind::fraction_pass;
      f.zero_kill_name = name == "zero";
      f.alpha = parse_double(rest);
    } else if (name == "amp") {
      auto x = rest.find('x');
      if (x == std::string::npos)
        throw ConfigError("amplifier needs alphaXfactor, got '" + text + "'");
      f.kind = Kind::amplify;
      f.alpha = parse_double(rest.substr(0, x));
      f.amp = parse_double(rest.substr(x + 1));
    } else {
      throw ConfigError("unknown filter kind '" + name + "'");
    }
    f.validate();
    return f;
  }

  std::string to_string() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::identity: return "identity";
      case Kind::clamp: os << "clamp:" << alpha; break;
      case Kind::fraction_pass: os << (zero_kill_name ? "zero:" : "pass:") << alpha; break;
      case Kind::amplify: os << "amp:" << alpha << "x" << amp; break;
    }
    return os.str();
  }

  bool is_identity() const { return kind == Kind::identity; }
};

// Maximum absolute value across a map's pixels; 0 for the all-zero map.
template <typename T>
T r_max(const TensorT<T>& m) {
  T best = T(0);
  for (T v : m.data) {
    T a = v < T(0) ? -v : v;
    if (a > best) best = a;
  }
  return best;
}

// Applies one filter to a map. Pixel rules, with m = r_max and |R_i|
// compared by >= at the boundary:
//   clamp:  |R_i| >= alpha*m -> sign(R_i)*alpha*m
//   pass:   |R_i| >= alpha*m -> 0
//   amp:    |R_i| >= alpha*m -> A*R_i
// The all-zero map is a fixed point of every kind.
template <typename T>
TensorT<T> apply_filter(const TensorT<T>& map, const FilterSpec& f) {
  f.validate();
  if (f.is_identity()) return map;
  const T m = r_max(map);
  const T threshold = T(f.alpha) * m;
  TensorT<T> out(map.shape);
  switch (f.kind) {
    case FilterSpec::Kind::clamp:
      for (std::size_t i = 0; i < map.data.size(); ++i) {
        T v = map.data[i];
        T a = v < T(0) ? -v : v;
        out.data[i] = a >= threshold ? (v < T(0) ? -threshold : threshold) : v;
      }
      break;
    case FilterSpec::Kind::fraction_pass:
      for (std::size_t i = 0; i < map.data.size(); ++i) {
        T v = map.data[i];
        T a = v < T(0) ? -v : v;
        out.data[i] = a >= threshold ? T(0) : v;
      }
      break;
    case FilterSpec::Kind::amplify:
      for (std::size_t i = 0; i < map.data.size(); ++i) {
        T v = map.data[i];
        T a = v < T(0) ? -v : v;
        out.data[i] = a >= threshold ? T(f.amp) * v : v;
      }
      break;
    case FilterSpec::Kind::identity:
      break;
  }
  return out;
}

// Filter assignment per relevance-map index (0 = input map, layer count =
// the seed). Unassigned indices mean Identity.
struct FilterPlan {
  std::map<int, FilterSpec> sites;

  static FilterPlan identity() { return {}; }

  bool is_identity() const {
    for (const auto& [k, f] : sites)
      if (!f.is_identity()) return false;
    return true;
  }

  const FilterSpec* at(int layer) const {
    auto it = sites.find(layer);
    return it == sites.end() ? nullptr : &it->second;
  }

  std::string to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, f] : sites) {
      if (!first) os << ",";
      os << k << "=" << f.to_string();
      first = false;
    }
    return first ? "(identity)" : os.str();
  }
};

// Builds a plan from (layer, spec) assignments; later assignments to the
// same layer override earlier ones. max_index is the largest legal site
// (the seed map index, i.e. the model's layer count).
inline FilterPlan compose_plan(
    const std::vector<std::pair<int, FilterSpec>>& assignments, int max_index) {
  FilterPlan plan;
  for (const auto& [layer, spec] : assignments) {
    if (layer < 0 || layer > max_index)
      throw ConfigError("filter plan references layer " + std::to_string(layer) +
                        ", valid range is 0.." + std::to_string(max_index));
    spec.validate();
    plan.sites[layer] = spec;
  }
  return plan;
}

}  // namespace lrplab
