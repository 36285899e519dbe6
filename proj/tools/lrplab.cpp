// Command-line front end for the relevance-propagation laboratory.
//
// Every shared option doubles as a config-file key (see --config), so a run
// can be replayed byte-for-byte from the config snapshot it writes next to
// its outputs.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "lrplab/harness.hpp"
#include "lrplab/synth.hpp"

namespace {

// Shared options mirror the config-file keys one to one. Collected values are
// replayed through ExperimentConfig::apply so the config layer stays the
// single registry of names, types and validation.
struct SharedOpts {
  std::string config_file;
  std::vector<std::pair<std::string, CLI::Option*>> keyed;
  std::vector<std::pair<std::string, std::string>> switches;

  void add(CLI::App& cmd) {
    cmd.add_option("--config", config_file,
                   "load options from a file; command-line flags win")
        ->option_text("FILE");
    auto opt = [&](const char* key, const char* text) {
      keyed.emplace_back(key, cmd.add_option(std::string("--") + key)
                                  ->description(text)
                                  ->take_last());
    };
    opt("model", "s1 | s2 | al1 | al2 | path to a recipe file");
    opt("data-dir", "directory with the four idx files");
    opt("out", "artifact directory (default: out)");
    opt("seed", "base seed for every derived stream");
    opt("epochs", "training epochs");
    opt("batch", "batch size");
    opt("eval-every", "iterations between evaluations");
    opt("acc-n", "test subset size for accuracy");
    opt("mp-n", "test subset size for spikiness");
    opt("lr", "learning rate");
    opt("rule", "relevance rule, eps[:v] | ab:a,b");
    opt("t-policy", "spikiness threshold, rel:f | abs:v");
    opt("track-layers", "auto | none | comma list of conv layers");
    opt("max-iters", "hard iteration cap, 0 = none");
    opt("stop-at-acc", "stop at the first evaluation reaching this accuracy");
    opt("ckpt", "checkpoint to explain / sweep / compare");
    keyed.emplace_back(
        "filter",
        cmd.add_option("--filter",
                       "relevance filter, repeatable; SITE is a layer index, "
                       "conv or seed; SPEC is identity, clamp:a, pass:a, "
                       "zero:a or amp:axA")
            ->option_text("SITE=SPEC")
            ->take_all());
    cmd.add_flag_callback(
        "--pin-mp-subset",
        [this] { switches.emplace_back("pin-mp-subset", "true"); },
        "reuse one spikiness subset instead of redrawing per evaluation");
    cmd.add_flag_callback(
        "--no-checkpoints",
        [this] { switches.emplace_back("checkpoints", "false"); },
        "skip the end-of-run checkpoint");
  }

  lrplab::ExperimentConfig build(bool checkpoints_default = true) const {
    lrplab::ExperimentConfig cfg;
    cfg.checkpoints = checkpoints_default;
    // config file first, then flags in given order, so the command line wins
    if (!config_file.empty())
      cfg = lrplab::load_config_file(config_file, std::move(cfg));
    for (const auto& [key, o] : keyed)
      for (const auto& value : o->results()) cfg.apply(key, value);
    for (const auto& [key, value] : switches) cfg.apply(key, value);
    return cfg;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"relevance propagation laboratory for small digit CNNs",
               "lrplab"};
  app.require_subcommand(1);

  CLI::App* train = app.add_subcommand(
      "train", "train a model, logging accuracy and per-layer spikiness");
  CLI::App* trend = app.add_subcommand(
      "mp-trend", "train without writing a checkpoint (trend tracking only)");
  CLI::App* explain = app.add_subcommand(
      "explain", "render relevance heatmaps for test samples");
  CLI::App* sweep = app.add_subcommand(
      "alpha-sweep", "sweep a filter strength against the unfiltered heatmap");
  CLI::App* rectify = app.add_subcommand(
      "rectify-compare",
      "filter at every planned layer vs once at the input layer");
  CLI::App* render = app.add_subcommand(
      "render", "turn an mp-trend csv into line plots and slopes");
  CLI::App* synth = app.add_subcommand(
      "synth-data", "generate the synthetic digit corpus");

  SharedOpts train_s, trend_s, explain_s, sweep_s, rectify_s, render_s,
      synth_s;
  train_s.add(*train);
  trend_s.add(*trend);
  explain_s.add(*explain);
  sweep_s.add(*sweep);
  rectify_s.add(*rectify);
  render_s.add(*render);
  synth_s.add(*synth);

  lrplab::ExplainOptions explain_opt;
  explain->add_option("--samples", explain_opt.indices,
                      "explicit test indices (default: the first --count)")
      ->delimiter(',');
  explain->add_option("--count", explain_opt.count,
                      "number of samples when --samples is absent")
      ->take_last();
  explain->add_option("--class", explain_opt.cls,
                      "explained class (default: the prediction)")
      ->take_last();
  explain->add_option("--amp-presets", explain_opt.amp_presets,
                      "extra amplifier plans at these alphas, gain 2")
      ->delimiter(',');
  explain->add_option("--scale", explain_opt.scale, "image upscale factor")
      ->take_last();
  explain->add_flag_callback("--no-png", [&] { explain_opt.png = false; },
                             "portable pixmaps only");

  lrplab::SweepOptions sweep_opt;
  sweep->add_option("--kind", sweep_opt.kind, "pass | zero | clamp | amp")
      ->take_last();
  sweep->add_option("--alphas", sweep_opt.alphas, "filter strengths to sweep")
      ->delimiter(',');
  sweep->add_option("--amp-a", sweep_opt.amp_a,
                    "amplifier gain when --kind amp")
      ->take_last();
  sweep->add_option("--count", sweep_opt.count, "samples per alpha")
      ->take_last();

  lrplab::RectifyOptions rectify_opt;
  rectify->add_option("--count", rectify_opt.count, "samples to compare")
      ->take_last();

  std::string render_csv;
  render->add_option("--csv", render_csv, "mp-trend csv to plot")->take_last();

  int synth_train_n = 4000;
  int synth_test_n = 1000;
  synth->add_option("--train-n", synth_train_n, "training images")
      ->take_last();
  synth->add_option("--test-n", synth_test_n, "test images")->take_last();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (train->parsed() || trend->parsed()) {
    lrplab::ExperimentConfig cfg =
        train->parsed() ? train_s.build() : trend_s.build(false);
    lrplab::TrainArtifacts art = lrplab::cmd_train(cfg);
    std::printf("ran %ld iterations, final accuracy %.4f%s\n", art.iterations,
                art.final_accuracy, art.stopped_early ? " (stopped early)" : "");
    std::printf("trend: %s\n", art.mp_trend_csv.string().c_str());
    if (!art.checkpoint.empty())
      std::printf("checkpoint: %s\n", art.checkpoint.string().c_str());
    return 0;
  }
  if (explain->parsed()) {
    lrplab::ExplainArtifacts art =
        lrplab::cmd_explain(explain_s.build(), explain_opt);
    std::printf("explained %d samples, %zu images, scores: %s\n", art.samples,
                art.images.size(), art.scores_csv.string().c_str());
    return 0;
  }
  if (sweep->parsed()) {
    lrplab::SweepArtifacts art =
        lrplab::cmd_alpha_sweep(sweep_s.build(), sweep_opt);
    std::printf("swept %zu alphas over %d samples: %s\n",
                sweep_opt.alphas.size(), art.n_samples,
                art.csv.string().c_str());
    return 0;
  }
  if (rectify->parsed()) {
    lrplab::RectifyArtifacts art =
        lrplab::cmd_rectification_compare(rectify_s.build(), rectify_opt);
    std::printf("mean error layerwise %.6g, final-only %.6g, difference %.6g\n",
                art.mean_mae_layerwise, art.mean_mae_final_only,
                art.difference);
    std::printf("rows: %s\n", art.csv.string().c_str());
    return 0;
  }
  if (render->parsed()) {
    lrplab::ExperimentConfig cfg = render_s.build();
    if (render_csv.empty())
      throw lrplab::ConfigError("render needs --csv FILE");
    lrplab::RenderArtifacts art =
        lrplab::cmd_render_mp_plot(render_csv, cfg.out_dir);
    for (const auto& [layer, slope] : art.slopes)
      std::printf("layer %d slope %.6g\n", layer, slope);
    std::printf("plots in %s\n", cfg.out_dir.c_str());
    return 0;
  }
  if (synth->parsed()) {
    lrplab::ExperimentConfig cfg = synth_s.build();
    auto dir = lrplab::synth::ensure_corpus(cfg.out_dir, synth_train_n,
                                            synth_test_n, cfg.seed);
    std::printf("corpus ready in %s (%d train, %d test)\n",
                dir.string().c_str(), synth_train_n, synth_test_n);
    return 0;
  }
  return 0;  // unreachable, a subcommand is required
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lrplab::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const lrplab::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return 4;
  } catch (const lrplab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const lrplab::ArgumentError& e) {
    std::fprintf(stderr, "argument error: %s\n", e.what());
    return 2;
  } catch (const lrplab::DimensionError& e) {
    std::fprintf(stderr, "dimension error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
