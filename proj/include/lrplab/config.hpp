#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lrplab/errors.hpp"

namespace lrplab {

// Everything a run needs, resolved to concrete values. Serializes to flat
// key = value text; the snapshot written next to run outputs uses the same
// format, so any run can be replayed from its own artifacts.
struct ExperimentConfig {
  std::string model = "s1";      // builtin name or a recipe file path
  std::string data_dir;          // directory with the idx files
  std::string out_dir = "out";   // artifact directory
  std::uint64_t seed = 1;
  int epochs = 2;
  int batch = 4;
  int eval_every = 1000;
  int acc_n = 1000;              // test-subset size for accuracy
  int mp_n = 240;                // test-subset size for spikiness tracking
  double lr = 1e-4;
  std::string rule = "eps:1e-6";
  std::string t_policy = "rel:0.1";
  std::vector<std::string> filters;   // "layer=spec" entries
  std::string track_layers = "auto";  // "auto", "none", or comma list
  long max_iters = 0;                 // 0 = run the full epoch count
  double stop_at_acc = 0.0;           // 0 = never stop early
  bool pin_mp_subset = false;         // reuse one subset instead of redrawing
  bool checkpoints = true;
  std::string ckpt;  // input checkpoint (explain/sweep/compare)

  void validate() const {
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch <= 0) throw ConfigError("batch must be positive");
    if (eval_every <= 0) throw ConfigError("eval-every must be positive");
    if (acc_n <= 0 || mp_n < 0) throw ConfigError("subset sizes out of range");
    if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
    if (max_iters < 0) throw ConfigError("max-iters must be >= 0");
    if (stop_at_acc < 0.0 || stop_at_acc > 1.0)
      throw ConfigError("stop-at-acc must be in [0,1]");
  }

  // One mutation point shared by the config-file reader and the CLI, so a
  // flag and its file key can never drift apart.
  void apply(const std::string& key, const std::string& value) {
    auto to_long = [&](const std::string& s) {
      std::size_t used = 0;
      long v;
      try {
        v = std::stol(s, &used);
      } catch (const std::exception&) {
        throw ConfigError("bad integer '" + s + "' for " + key);
      }
      if (used != s.size()) throw ConfigError("bad integer '" + s + "' for " + key);
      return v;
    };
    auto to_double = [&](const std::string& s) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + s + "' for " + key);
      }
      if (used != s.size()) throw ConfigError("bad number '" + s + "' for " + key);
      return v;
    };
    auto to_bool = [&](const std::string& s) {
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw ConfigError("bad boolean '" + s + "' for " + key);
    };

    if (key == "model") model = value;
    else if (key == "data-dir") data_dir = value;
    else if (key == "out") out_dir = value;
    else if (key == "seed") seed = std::uint64_t(to_long(value));
    else if (key == "epochs") epochs = int(to_long(value));
    else if (key == "batch") batch = int(to_long(value));
    else if (key == "eval-every") eval_every = int(to_long(value));
    else if (key == "acc-n") acc_n = int(to_long(value));
    else if (key == "mp-n") mp_n = int(to_long(value));
    else if (key == "lr") lr = to_double(value);
    else if (key == "rule") rule = value;
    else if (key == "t-policy") t_policy = value;
    else if (key == "filter") filters.push_back(value);
    else if (key == "track-layers") track_layers = value;
    else if (key == "max-iters") max_iters = to_long(value);
    else if (key == "stop-at-acc") stop_at_acc = to_double(value);
    else if (key == "pin-mp-subset") pin_mp_subset = to_bool(value);
    else if (key == "checkpoints") checkpoints = to_bool(value);
    else if (key == "ckpt") ckpt = value;
    else throw ConfigError("unknown config key '" + key + "'");
  }

  std::string serialize() const {
    std::ostringstream os;
    os << "# resolved run configuration\n";
    os << "model = " << model << "\n";
    os << "data-dir = " << data_dir << "\n";
    os << "out = " << out_dir << "\n";
    os << "seed = " << seed << "\n";
    os << "epochs = " << epochs << "\n";
    os << "batch = " << batch << "\n";
    os << "eval-every = " << eval_every << "\n";
    os << "acc-n = " << acc_n << "\n";
    os << "mp-n = " << mp_n << "\n";
    os << "lr = " << lr << "\n";
    os << "rule = " << rule << "\n";
    os << "t-policy = " << t_policy << "\n";
    for (const auto& f : filters) os << "filter = " << f << "\n";
    os << "track-layers = " << track_layers << "\n";
    os << "max-iters = " << max_iters << "\n";
    os << "stop-at-acc = " << stop_at_acc << "\n";
    os << "pin-mp-subset = " << (pin_mp_subset ? "true" : "false") << "\n";
    os << "checkpoints = " << (checkpoints ? "true" : "false") << "\n";
    if (!ckpt.empty()) os << "ckpt = " << ckpt << "\n";
    return os.str();
  }
};

// Flat key = value text. '#' starts a comment, [section] lines are allowed
// as visual grouping and otherwise ignored.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          ExperimentConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[' && line.back() == ']') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key = value: '" + line + "'");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      auto b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key on config line " + std::to_string(lineno));
    base.apply(key, value);
  }
  return base;
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path,
                                         ExperimentConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse_config_text(text, std::move(base));
}

}  // namespace lrplab
