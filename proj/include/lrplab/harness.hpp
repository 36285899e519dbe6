#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lrplab/config.hpp"
#include "lrplab/csv.hpp"
#include "lrplab/errors.hpp"
#include "lrplab/filters.hpp"
#include "lrplab/image.hpp"
#include "lrplab/lrp.hpp"
#include "lrplab/metrics.hpp"
#include "lrplab/mnist.hpp"
#include "lrplab/models.hpp"
#include "lrplab/nn.hpp"
#include "lrplab/rng.hpp"
#include "lrplab/tensor.hpp"

namespace lrplab {

constexpr char kMpTrendSchema[] = "lrplab-mp-trend-v1";
constexpr char kTrainLogSchema[] = "lrplab-train-log-v1";
constexpr char kSweepSchema[] = "lrplab-alpha-sweep-v1";
constexpr char kRectifySchema[] = "lrplab-rectify-v1";
constexpr char kSlopesSchema[] = "lrplab-mp-slopes-v1";
constexpr char kNoiseSchema[] = "lrplab-noise-scores-v1";

namespace hdetail {

inline int strict_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  int v;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad integer '" + s + "' in " + what);
  }
  if (used != s.size()) throw ConfigError("bad integer '" + s + "' in " + what);
  return v;
}

inline std::string trim_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace hdetail

// Builds a filter plan from "site=spec" strings. A site is a layer index,
// "conv" (every convolution layer), or "seed" (the class-score map).
template <typename T>
FilterPlan plan_from_strings(const ModelT<T>& model,
                             const std::vector<std::string>& entries) {
  std::vector<std::pair<int, FilterSpec>> assigns;
  for (const auto& e : entries) {
    auto eq = e.find('=');
    if (eq == std::string::npos)
      throw ConfigError("filter entry must be site=spec, got '" + e + "'");
    std::string where = e.substr(0, eq);
    FilterSpec spec = FilterSpec::parse(e.substr(eq + 1));
    if (where == "conv") {
      for (int k : conv_layer_indices(model)) assigns.emplace_back(k, spec);
    } else if (where == "seed") {
      assigns.emplace_back(model.layer_count(), spec);
    } else {
      assigns.emplace_back(hdetail::strict_int(where, "filter entry '" + e + "'"),
                           spec);
    }
  }
  return compose_plan(assigns, model.layer_count());
}

// "auto" = first four convolutions, "none" = nothing, else comma-separated
// layer indices.
template <typename T>
std::vector<int> resolve_tracked_layers(const ModelT<T>& model,
                                        const std::string& text) {
  if (text == "auto") return default_tracked_layers(model);
  if (text == "none") return {};
  std::vector<int> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ','))
    out.push_back(hdetail::strict_int(cur, "track-layers"));
  if (out.empty()) throw ConfigError("track-layers has no entries: '" + text + "'");
  return out;
}

// Adapts a stored 28x28 sample to the model's input size.
template <typename T>
TensorT<T> prepare_input(const Tensor& img, const ModelT<T>& model) {
  if (img.shape == model.input_shape) return img.template cast<T>();
  if (model.input_shape == std::vector<int>{1, 140, 140} &&
      img.shape == std::vector<int>{1, 28, 28})
    return enlarge_image(img).template cast<T>();
  throw DimensionError("sample shape " + shape_string(img.shape) +
                       " does not fit model input " +
                       shape_string(model.input_shape));
}

struct TrainArtifacts {
  std::filesystem::path out_dir;
  std::filesystem::path mp_trend_csv;
  std::filesystem::path train_log_csv;
  std::filesystem::path checkpoint;  // empty when checkpointing is off
  std::filesystem::path config_snapshot;
  double final_accuracy = 0.0;
  long iterations = 0;
  bool stopped_early = false;
};

// Trains the configured model, evaluating accuracy and per-layer spikiness
// at iteration 0 and every cadence point. The spikiness subset is redrawn
// from (seed, iteration) each eval unless pinned.
inline TrainArtifacts cmd_train(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.data_dir.empty()) throw ConfigError("train needs a data directory");
  const LrpRule rule = LrpRule::parse(cfg.rule);
  const TPolicy policy = TPolicy::parse(cfg.t_policy);

  std::filesystem::create_directories(cfg.out_dir);
  TrainArtifacts art;
  art.out_dir = cfg.out_dir;
  art.config_snapshot = std::filesystem::path(cfg.out_dir) / "config.txt";
  {
    std::ofstream snap(art.config_snapshot);
    if (!snap) throw IoError("cannot write " + art.config_snapshot.string());
    snap << cfg.serialize();
  }

  Dataset train_set = load_mnist(cfg.data_dir, Split::train, false);
  Dataset test_set = load_mnist(cfg.data_dir, Split::test, false);
  if (train_set.size() == 0 || test_set.size() == 0)
    throw FormatError("empty dataset in " + cfg.data_dir);

  Model model = build_model<float>(resolve_recipe(cfg.model),
                                   derive_seed(cfg.seed, 0x0de1ull));
  const bool enlarge = model.input_shape != train_set.images.front().shape;
  if (enlarge) prepare_input(train_set.images.front(), model);  // shape check

  const std::vector<int> tracked = resolve_tracked_layers(model, cfg.track_layers);
  const int acc_n = std::min<int>(cfg.acc_n, int(test_set.size()));
  const std::vector<int> acc_idx =
      sample_subset(test_set.size(), acc_n, derive_seed(cfg.seed, 0xacc0ull));

  AdamStateT<float> adam = adam_init(model);
  AdamConfig opt;
  opt.lr = cfg.lr;
  BatchIterator batches(train_set.size(), cfg.batch,
                        derive_seed(cfg.seed, 0xba7c4ull));
  long total = long(cfg.epochs) * batches.batches_per_epoch();
  if (cfg.max_iters > 0) total = std::min(total, cfg.max_iters);

  art.mp_trend_csv = std::filesystem::path(cfg.out_dir) / "mp-trend.csv";
  art.train_log_csv = std::filesystem::path(cfg.out_dir) / "train-log.csv";
  CsvWriter trend(art.mp_trend_csv, kMpTrendSchema,
                  {"iteration", "accuracy", "layer", "mp_plus", "mp_minus", "mp",
                   "undefined_count"});
  CsvWriter log(art.train_log_csv, kTrainLogSchema,
                {"iteration", "mean_loss", "accuracy"});

  double loss_sum = 0.0;
  long loss_n = 0;
  auto run_eval = [&](long it) {
    const double acc = evaluate_accuracy(model, test_set, acc_idx, enlarge);
    log.write_row({std::to_string(it),
                   loss_n ? csv_double(loss_sum / double(loss_n)) : std::string(),
                   csv_double(acc)});
    loss_sum = 0.0;
    loss_n = 0;
    if (tracked.empty() || cfg.mp_n == 0) {
      trend.write_row({std::to_string(it), csv_double(acc), "-1", "", "", "", "0"});
      return acc;
    }
    const std::uint64_t subset_seed =
        derive_seed(cfg.seed, 0x3b00ull, cfg.pin_mp_subset ? 0 : std::uint64_t(it));
    const int mp_n = std::min<int>(cfg.mp_n, int(test_set.size()));
    std::vector<Tensor> samples;
    samples.reserve(std::size_t(mp_n));
    for (int idx : sample_subset(test_set.size(), mp_n, subset_seed))
      samples.push_back(prepare_input(test_set.images[std::size_t(idx)], model));
    for (const MpBatchRow& row : mp_batch(model, samples, tracked, rule, policy))
      trend.write_row({std::to_string(it), csv_double(acc),
                       std::to_string(row.layer_index), csv_optional(row.mp_plus),
                       csv_optional(row.mp_minus), csv_optional(row.mp),
                       std::to_string(row.undefined_mp)});
    return acc;
  };

  double acc = run_eval(0);
  long it = 0;
  if (cfg.stop_at_acc > 0.0 && acc >= cfg.stop_at_acc) {
    art.stopped_early = true;
  } else {
    std::vector<Tensor> storage;
    std::vector<const Tensor*> ptrs;
    std::vector<int> labels;
    while (it < total) {
      ++it;
      const std::vector<int> bidx = batches.next();
      storage.clear();
      ptrs.clear();
      labels.clear();
      for (int s : bidx) {
        if (enlarge) {
          storage.push_back(prepare_input(train_set.images[std::size_t(s)], model));
        } else {
          ptrs.push_back(&train_set.images[std::size_t(s)]);
        }
        labels.push_back(train_set.labels[std::size_t(s)]);
      }
      for (const Tensor& t : storage) ptrs.push_back(&t);
      loss_sum += train_step(model, ptrs, labels, adam, opt);
      ++loss_n;
      if (it % cfg.eval_every == 0) {
        acc = run_eval(it);
        if (cfg.stop_at_acc > 0.0 && acc >= cfg.stop_at_acc) {
          art.stopped_early = true;
          break;
        }
      }
    }
  }

  if (cfg.checkpoints) {
    art.checkpoint = std::filesystem::path(cfg.out_dir) / "model.ckpt";
    save_checkpoint(art.checkpoint, model, std::uint64_t(it), &adam);
  }
  art.final_accuracy = acc;
  art.iterations = it;
  return art;
}

struct ExplainOptions {
  std::vector<int> indices;          // explicit test-sample indices
  int count = 4;                     // when indices is empty: first N samples
  int cls = -1;                      // -1 = the predicted class
  std::vector<double> amp_presets;   // amplifier plans at these alphas, A=2
  int scale = 8;                     // image upscale factor
  bool png = true;                   // portable pixmaps always, png optionally
};

struct ExplainArtifacts {
  std::filesystem::path out_dir;
  std::filesystem::path scores_csv;
  std::vector<std::filesystem::path> images;
  int samples = 0;
};

// Explains test samples with the configured rule: a baseline heatmap and
// its 1/10 view per sample, one more image set per requested plan, the raw
// relevance bundle, and an off-digit noise score for every variant.
inline ExplainArtifacts cmd_explain(const ExperimentConfig& cfg,
                                    const ExplainOptions& opt) {
  if (cfg.ckpt.empty()) throw ConfigError("explain needs a checkpoint");
  if (opt.scale < 1) throw ConfigError("scale must be >= 1");
  auto ck = load_checkpoint<float>(cfg.ckpt);
  Model& model = ck.model;
  const LrpRule rule = LrpRule::parse(cfg.rule);
  Dataset test_set = load_mnist(cfg.data_dir, Split::test, false);
  if (test_set.size() == 0) throw FormatError("empty dataset in " + cfg.data_dir);

  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream snap(std::filesystem::path(cfg.out_dir) / "config.txt");
    snap << cfg.serialize();
  }

  std::vector<std::pair<std::string, FilterPlan>> variants;
  variants.emplace_back("baseline", FilterPlan::identity());
  if (!cfg.filters.empty())
    variants.emplace_back("plan", plan_from_strings(model, cfg.filters));
  for (double a : opt.amp_presets) {
    FilterSpec spec;
    spec.kind = FilterSpec::Kind::amplify;
    spec.alpha = a;
    spec.amp = 2.0;
    spec.validate();
    variants.emplace_back("p" + hdetail::trim_number(a),
                          plan_all_conv_inputs(model, spec));
  }

  std::vector<int> indices = opt.indices;
  if (indices.empty()) {
    const int n = std::min<int>(opt.count, int(test_set.size()));
    for (int i = 0; i < n; ++i) indices.push_back(i);
  }

  ExplainArtifacts art;
  art.out_dir = cfg.out_dir;
  art.scores_csv = std::filesystem::path(cfg.out_dir) / "noise-scores.csv";
  CsvWriter scores(art.scores_csv, kNoiseSchema,
                   {"sample", "variant", "label", "predicted", "noise_score"});

  for (int idx : indices) {
    if (idx < 0 || idx >= int(test_set.size()))
      throw ArgumentError("sample index " + std::to_string(idx) +
                          " outside the test set");
    const Tensor x = prepare_input(test_set.images[std::size_t(idx)], model);
    const auto trace = forward_with_trace(model, x);
    const int cls = opt.cls >= 0 ? opt.cls : trace.predicted_class();
    const GroundtruthMask mask = groundtruth_mask(x);
    const std::string stem = "sample" + std::to_string(idx);

    auto emit = [&](const std::string& name, const Tensor& map_2d) {
      Image img = render_heatmap(map_2d, opt.scale);
      auto base = std::filesystem::path(cfg.out_dir) / (stem + "_" + name);
      write_ppm(base.string() + ".ppm", img);
      art.images.push_back(base.string() + ".ppm");
      if (opt.png) {
        write_png(base.string() + ".png", img);
        art.images.push_back(base.string() + ".png");
      }
    };

    {
      Tensor flat = x.reshaped({model.input_shape[1], model.input_shape[2]});
      Image digit = render_grayscale(flat, opt.scale);
      auto p = std::filesystem::path(cfg.out_dir) / (stem + "_input.ppm");
      write_ppm(p, digit);
      art.images.push_back(p);
      if (opt.png) {
        auto q = std::filesystem::path(cfg.out_dir) / (stem + "_input.png");
        write_png(q, digit);
        art.images.push_back(q);
      }
    }

    for (const auto& [name, plan] : variants) {
      const auto rel = explain(model, trace, cls, rule, plan);
      const Tensor heat = heatmap_2d(rel.maps.back().values);
      emit(name, heat);
      emit(name + "_tenth", tenth_view(heat));
      save_bundle(std::filesystem::path(cfg.out_dir) / (stem + "_" + name + ".bundle"),
                  rel, cls);
      scores.write_row({std::to_string(idx), name,
                        std::to_string(test_set.labels[std::size_t(idx)]),
                        std::to_string(trace.predicted_class()),
                        csv_double(masked_noise_score(heat, mask))});
    }
    ++art.samples;
  }
  return art;
}

struct SweepOptions {
  std::string kind = "pass";     // pass | zero | clamp | amp
  std::vector<double> alphas;
  double amp_a = 2.0;
  int count = 8;                 // samples drawn from the test set
};

struct SweepArtifacts {
  std::filesystem::path csv;
  int n_samples = 0;
};

// For each alpha: filter all conv-layer maps with the chosen kind, compare
// the resulting heatmap against the unfiltered one, and aggregate error,
// strong-pixel fraction, and off-digit noise over the sample set.
inline SweepArtifacts cmd_alpha_sweep(const ExperimentConfig& cfg,
                                      SweepOptions opt) {
  if (cfg.ckpt.empty()) throw ConfigError("alpha-sweep needs a checkpoint");
  if (opt.alphas.empty()) throw ConfigError("alpha-sweep needs at least one alpha");
  if (opt.count <= 0) throw ConfigError("sample count must be positive");
  std::sort(opt.alphas.begin(), opt.alphas.end());

  auto ck = load_checkpoint<float>(cfg.ckpt);
  Model& model = ck.model;
  const LrpRule rule = LrpRule::parse(cfg.rule);
  Dataset test_set = load_mnist(cfg.data_dir, Split::test, false);
  if (test_set.size() == 0) throw FormatError("empty dataset in " + cfg.data_dir);

  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream snap(std::filesystem::path(cfg.out_dir) / "config.txt");
    snap << cfg.serialize();
    snap << "# sweep: kind=" << opt.kind << " amp_a=" << opt.amp_a << " count="
         << opt.count << "\n";
  }

  auto make_spec = [&](double alpha) {
    FilterSpec spec;
    if (opt.kind == "pass" || opt.kind == "zero") {
      spec.kind = FilterSpec::Kind::fraction_pass;
      spec.zero_kill_name = opt.kind == "zero";
    } else if (opt.kind == "clamp") {
      spec.kind = FilterSpec::Kind::clamp;
    } else if (opt.kind == "amp") {
      spec.kind = FilterSpec::Kind::amplify;
      spec.amp = opt.amp_a;
    } else {
      throw ConfigError("unknown sweep filter kind '" + opt.kind + "'");
    }
    spec.alpha = alpha;
    spec.validate();
    return spec;
  };
  for (double a : opt.alphas) make_spec(a);  // validate the whole grid upfront

  const int n = std::min<int>(opt.count, int(test_set.size()));
  const std::vector<int> idx =
      sample_subset(test_set.size(), n, derive_seed(cfg.seed, 0x5eedull));

  struct Prepared {
    TraceT<float> trace;
    int cls = 0;
    Tensor ref_heat;
    GroundtruthMask mask;
  };
  std::vector<Prepared> prepared;
  for (int i : idx) {
    Prepared p;
    const Tensor x = prepare_input(test_set.images[std::size_t(i)], model);
    p.trace = forward_with_trace(model, x);
    p.cls = p.trace.predicted_class();
    const auto rel = explain(model, p.trace, p.cls, rule, FilterPlan::identity());
    p.ref_heat = heatmap_2d(rel.maps.back().values);
    p.mask = groundtruth_mask(x);
    prepared.push_back(std::move(p));
  }

  SweepArtifacts art;
  art.csv = std::filesystem::path(cfg.out_dir) / "alpha-sweep.csv";
  art.n_samples = n;
  CsvWriter out(art.csv, kSweepSchema,
                {"alpha", "mae", "p_alpha", "noise_score", "n_samples"});
  for (double alpha : opt.alphas) {
    const FilterPlan plan = plan_all_conv_inputs(model, make_spec(alpha));
    double sum_mae = 0.0, sum_p = 0.0, sum_noise = 0.0;
    for (const Prepared& p : prepared) {
      const auto rel = explain(model, p.trace, p.cls, rule, plan);
      const Tensor heat = heatmap_2d(rel.maps.back().values);
      sum_mae += mae(p.ref_heat, heat);
      sum_p += decompose_error(p.ref_heat, heat, alpha).p_alpha;
      sum_noise += masked_noise_score(heat, p.mask);
    }
    out.write_row({csv_double(alpha), csv_double(sum_mae / n), csv_double(sum_p / n),
                   csv_double(sum_noise / n), std::to_string(n)});
  }
  return art;
}

struct RectifyOptions {
  int count = 8;
};

struct RectifyArtifacts {
  std::filesystem::path csv;
  double mean_mae_layerwise = 0.0;
  double mean_mae_final_only = 0.0;
  double difference = 0.0;  // layerwise minus final-only
};

// Applies the configured plan two ways, at every planned site vs the same
// filter once on the input-layer map, and scores both against the
// unfiltered reference.
inline RectifyArtifacts cmd_rectification_compare(const ExperimentConfig& cfg,
                                                  const RectifyOptions& opt) {
  if (cfg.ckpt.empty()) throw ConfigError("rectify-compare needs a checkpoint");
  if (opt.count <= 0) throw ConfigError("sample count must be positive");
  auto ck = load_checkpoint<float>(cfg.ckpt);
  Model& model = ck.model;
  const LrpRule rule = LrpRule::parse(cfg.rule);
  Dataset test_set = load_mnist(cfg.data_dir, Split::test, false);
  if (test_set.size() == 0) throw FormatError("empty dataset in " + cfg.data_dir);

  const FilterPlan layerwise = plan_from_strings(model, cfg.filters);
  FilterPlan final_only;
  double alpha = 0.5;  // decomposition threshold when the plan is identity
  if (!layerwise.sites.empty()) {
    const auto& [site, spec] = *layerwise.sites.begin();
    final_only.sites[0] = spec;
    if (!spec.is_identity()) alpha = spec.alpha;
  }

  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream snap(std::filesystem::path(cfg.out_dir) / "config.txt");
    snap << cfg.serialize();
    snap << "# rectify: count=" << opt.count << "\n";
  }

  const int n = std::min<int>(opt.count, int(test_set.size()));
  const std::vector<int> idx =
      sample_subset(test_set.size(), n, derive_seed(cfg.seed, 0x2ec7ull));

  RectifyArtifacts art;
  art.csv = std::filesystem::path(cfg.out_dir) / "rectify-compare.csv";
  CsvWriter out(art.csv, kRectifySchema,
                {"sample", "mode", "mae", "p_alpha", "noise_score"});
  double sum_a = 0.0, sum_b = 0.0;
  for (int i : idx) {
    const Tensor x = prepare_input(test_set.images[std::size_t(i)], model);
    const auto trace = forward_with_trace(model, x);
    const int cls = trace.predicted_class();
    const GroundtruthMask mask = groundtruth_mask(x);
    const auto ref_rel = explain(model, trace, cls, rule, FilterPlan::identity());
    const Tensor ref = heatmap_2d(ref_rel.maps.back().values);
    auto score = [&](const FilterPlan& plan, const char* label) {
      const auto rel = explain(model, trace, cls, rule, plan);
      const Tensor heat = heatmap_2d(rel.maps.back().values);
      const double m = mae(ref, heat);
      out.write_row({std::to_string(i), label, csv_double(m),
                     csv_double(decompose_error(ref, heat, alpha).p_alpha),
                     csv_double(masked_noise_score(heat, mask))});
      return m;
    };
    sum_a += score(layerwise, "layerwise");
    sum_b += score(final_only, "final-only");
  }
  art.mean_mae_layerwise = sum_a / n;
  art.mean_mae_final_only = sum_b / n;
  art.difference = art.mean_mae_layerwise - art.mean_mae_final_only;
  out.write_row({"all", "aggregate-layerwise", csv_double(art.mean_mae_layerwise),
                 "", ""});
  out.write_row({"all", "aggregate-final-only", csv_double(art.mean_mae_final_only),
                 "", ""});
  out.write_row({"all", "difference", csv_double(art.difference), "", ""});
  return art;
}

inline double least_squares_slope(const std::vector<double>& x,
                                  const std::vector<double>& y) {
  if (x.size() != y.size()) throw ArgumentError("slope input lengths differ");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return den == 0.0 ? 0.0 : num / den;
}

// Per-layer least-squares slope of the mean MP column over iterations.
// Rows with an empty mp cell and the layer=-1 placeholder rows are skipped.
inline std::map<int, double> mp_trend_slopes(const CsvFile& csv) {
  const int ci = csv.column("iteration");
  const int cl = csv.column("layer");
  const int cm = csv.column("mp");
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> series;
  for (const auto& row : csv.rows) {
    const int layer = hdetail::strict_int(row[std::size_t(cl)], "layer column");
    if (layer < 0) continue;
    auto mp = csv_to_optional(row[std::size_t(cm)]);
    if (!mp) continue;
    series[layer].first.push_back(csv_to_double(row[std::size_t(ci)]));
    series[layer].second.push_back(*mp);
  }
  std::map<int, double> slopes;
  for (const auto& [layer, xy] : series)
    slopes[layer] = least_squares_slope(xy.first, xy.second);
  return slopes;
}

struct RenderArtifacts {
  std::filesystem::path slopes_csv;
  std::vector<std::filesystem::path> plots;
  std::map<int, double> slopes;
};

// Turns an mp-trend CSV into one line plot per tracked layer plus a summary
// of least-squares slopes.
inline RenderArtifacts cmd_render_mp_plot(const std::filesystem::path& csv_path,
                                          const std::filesystem::path& out_dir) {
  CsvFile csv = load_csv(csv_path);
  if (csv.schema != kMpTrendSchema)
    throw FormatError("expected schema " + std::string(kMpTrendSchema) +
                      ", file has '" + csv.schema + "'");
  const int ci = csv.column("iteration");
  const int cl = csv.column("layer");
  const int cm = csv.column("mp");

  std::map<int, PlotSeries> series;
  for (const auto& row : csv.rows) {
    const int layer = hdetail::strict_int(row[std::size_t(cl)], "layer column");
    if (layer < 0) continue;
    auto mp = csv_to_optional(row[std::size_t(cm)]);
    if (!mp) continue;
    series[layer].x.push_back(csv_to_double(row[std::size_t(ci)]));
    series[layer].y.push_back(*mp);
  }

  std::filesystem::create_directories(out_dir);
  RenderArtifacts art;
  art.slopes = mp_trend_slopes(csv);
  art.slopes_csv = out_dir / "mp-slopes.csv";
  CsvWriter slopes(art.slopes_csv, kSlopesSchema, {"layer", "slope", "n_points"});
  for (auto& [layer, s] : series) {
    Image plot = render_line_plot({s});
    auto path = out_dir / ("mp-layer" + std::to_string(layer) + ".png");
    write_png(path, plot);
    art.plots.push_back(path);
    slopes.write_row({std::to_string(layer), csv_double(art.slopes[layer]),
                      std::to_string(s.x.size())});
  }
  return art;
}

}  // namespace lrplab
