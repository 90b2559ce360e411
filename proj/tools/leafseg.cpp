// leafseg: synthesize, train, segment and evaluate leaf segmentations.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "leafseg/metrics.hpp"
#include "leafseg/palette.hpp"
#include "leafseg/pipeline.hpp"
#include "leafseg/png_io.hpp"
#include "leafseg/synth.hpp"

namespace fs = std::filesystem;
using namespace leafseg;

namespace {

struct Options {
  std::string config;
  std::string input;
  std::string gt;
  std::string model;
  std::string out;
  std::string layers;
  std::optional<std::string> mode;
  std::optional<int> patch_size;
  std::optional<int> temporal;
  std::optional<std::uint64_t> seed;
};

KeyValueConfig load_config(const Options& o) {
  if (o.config.empty()) return {};
  if (!fs::exists(o.config)) throw Error(ErrorCode::ConfigError, "config file not found: " + o.config);
  return KeyValueConfig::load(o.config);
}

// Command-line flags override config keys.
PipelineConfig resolve(const Options& o, const KeyValueConfig& kv) {
  PipelineConfig cfg = pipeline_config_from(kv);
  if (!o.input.empty()) cfg.input = o.input;
  if (!o.gt.empty()) cfg.gt = o.gt;
  if (!o.model.empty()) cfg.model = o.model;
  if (!o.out.empty()) cfg.out = o.out;
  if (o.mode) cfg.mode = parse_mode(*o.mode);
  if (o.patch_size) cfg.patch_side = *o.patch_size;
  if (o.temporal) cfg.temporal_frames = *o.temporal;
  if (o.seed) {
    cfg.train.seed = *o.seed;
    cfg.balance.seed = *o.seed;
  }
  cfg.validate();
  return cfg;
}

void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw Error(ErrorCode::ConfigError, std::string(flag) + " is required");
}

std::vector<RgbImage> load_item_frames(const PipelineConfig& cfg, const ImageEntry& e) {
  if (cfg.temporal()) return load_frame_sequence(cfg.input, e.stem);
  return {load_png(e.path)};
}

std::optional<LabelImage> find_truth(const fs::path& gt_dir, const std::string& stem) {
  if (gt_dir.empty()) return std::nullopt;
  const fs::path p = gt_dir / (stem + "_gt.png");
  if (!fs::exists(p)) return std::nullopt;
  return load_label_png(p);
}

void write_report(const fs::path& out_dir, std::vector<PlantMetrics> records) {
  MetricReport report;
  if (!records.empty()) report = aggregate(std::move(records));
  save_report_csv(out_dir / "metrics.csv", report);
  std::cerr << "metrics: " << report.plants.size() << " plants written to " << (out_dir / "metrics.csv").string()
            << "\n  smj uses greedy one-to-one matching (highest Jaccard first, ties to lower gt then pred label)\n";
  if (!report.plants.empty()) {
    std::cerr << "  mean |DiC| " << report.abs_dic.mean << ", FBD " << report.fbd.mean << ", SBD " << report.sbd.mean
              << ", SMJ " << report.smj.mean << "\n";
  }
}

struct ItemResult {
  std::vector<PlantMetrics> metrics;
  std::optional<Error> error;
};

// Runs `fn` per input on the worker pool. Every finished item has already
// written its files; metrics of successful items are flushed even when a
// later one fails, and the first failure decides the exit status.
int run_items(const std::vector<ImageEntry>& items, const fs::path& out_dir,
              const std::function<std::vector<PlantMetrics>(const ImageEntry&)>& fn, bool with_metrics) {
  const auto results = parallel_map<ItemResult>(items.size(), worker_count(), [&](std::size_t i) {
    ItemResult r;
    try {
      r.metrics = fn(items[i]);
    } catch (const Error& e) {
      r.error = e;
    }
    return r;
  });
  std::vector<PlantMetrics> records;
  int status = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    if (r.error) {
      std::cerr << items[i].stem << ": " << r.error->what() << "\n";
      if (status == 0) status = exit_code_for(r.error->code());
      continue;
    }
    records.insert(records.end(), r.metrics.begin(), r.metrics.end());
  }
  if (with_metrics) write_report(out_dir, std::move(records));
  return status;
}

int cmd_synth(const Options& o) {
  const KeyValueConfig kv = load_config(o);
  const KeyValueConfig s = kv.section("synth");
  if (o.out.empty()) throw Error(ErrorCode::ConfigError, "--out is required");
  SpecRanges ranges;
  ranges.leaf_count_min = static_cast<int>(s.get_int("leaf_count_min", ranges.leaf_count_min));
  ranges.leaf_count_max = static_cast<int>(s.get_int("leaf_count_max", ranges.leaf_count_max));
  ranges.overlap_min = s.get_double("overlap_min", ranges.overlap_min);
  ranges.overlap_max = s.get_double("overlap_max", ranges.overlap_max);
  ranges.base.leaf_length_min = s.get_double("leaf_length_min", ranges.base.leaf_length_min);
  ranges.base.leaf_length_max = s.get_double("leaf_length_max", ranges.base.leaf_length_max);
  ranges.base.leaf_width_min = s.get_double("leaf_width_min", ranges.base.leaf_width_min);
  ranges.base.leaf_width_max = s.get_double("leaf_width_max", ranges.base.leaf_width_max);
  ranges.base.angular_jitter = s.get_double("angular_jitter", ranges.base.angular_jitter);
  ranges.base.texture_amplitude = s.get_double("texture", ranges.base.texture_amplitude);
  if (ranges.leaf_count_min > ranges.leaf_count_max || ranges.overlap_min > ranges.overlap_max) {
    throw Error(ErrorCode::ConfigError, "synth ranges are inverted");
  }
  const int count = static_cast<int>(s.get_int("count", 20));
  const int canvas = static_cast<int>(s.get_int("canvas", 192));
  const std::uint64_t seed = o.seed.value_or(static_cast<std::uint64_t>(s.get_int("seed", 1)));
  const int frames = o.temporal.value_or(static_cast<int>(s.get_int("frames", 0)));
  if (count < 1) throw Error(ErrorCode::ConfigError, "synth.count must be >= 1");
  const auto manifest = sample_manifest(count, ranges, seed, canvas);
  try {
    write_dataset(o.out, manifest, frames);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CanvasTooSmall || e.code() == ErrorCode::InvalidArgument) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
    throw;
  }
  std::cerr << "wrote " << count << " plants to " << o.out << "\n";
  return 0;
}

int cmd_train(const Options& o) {
  const PipelineConfig cfg = resolve(o, load_config(o));
  require(cfg.input, "--input");
  require(cfg.model, "--model");
  const fs::path gt_dir = cfg.gt.empty() ? cfg.input : cfg.gt;
  const auto items = list_images(cfg.input);

  PatchDataset data;
  if (cfg.temporal()) {
    std::vector<TemporalPair> pairs;
    for (const auto& e : items) {
      auto truth = find_truth(gt_dir, e.stem);
      if (!truth) continue;
      pairs.push_back({load_frame_sequence(cfg.input, e.stem), std::move(*truth)});
    }
    data = build_temporal_training_set(pairs, cfg.patch_options(), cfg.temporal_frames);
  } else {
    std::vector<TrainingPair> pairs;
    for (const auto& e : items) {
      auto truth = find_truth(gt_dir, e.stem);
      if (!truth) continue;
      pairs.push_back({load_png(e.path), std::move(*truth)});
    }
    data = build_training_set(pairs, cfg.patch_options());
  }
  if (data.empty()) throw Error(ErrorCode::ConfigError, "no training pairs with ground truth under " + cfg.input.string());
  const auto hist = data.histogram();
  std::cerr << "patches: " << data.size();
  for (const EdgeClass c : kAllEdgeClasses) std::cerr << ", " << to_string(c) << " " << hist[static_cast<std::size_t>(index_of(c))];
  std::cerr << "\n";

  TreeTrainLog tree_log;
  TrainLog four_log;
  const AnyModel model = train_model(data, cfg, &tree_log, &four_log);
  if (cfg.model.has_parent_path()) fs::create_directories(cfg.model.parent_path());
  std::visit([&](const auto& m) { save_model(cfg.model, m); }, model);

  std::ofstream log(cfg.model.string() + ".log.csv", std::ios::trunc);
  log << "network,epoch,loss,accuracy\n";
  auto dump = [&](const char* name, const TrainLog& l) {
    for (std::size_t i = 0; i < l.epoch_loss.size(); ++i) {
      char line[128];
      std::snprintf(line, sizeof(line), "%s,%zu,%.6f,%.6f\n", name, i + 1, l.epoch_loss[i], l.epoch_accuracy[i]);
      log << line;
    }
  };
  if (cfg.mode == ClassifierMode::Tree) {
    dump("split", tree_log.split);
    dump("internal", tree_log.internal);
    dump("external", tree_log.external);
  } else {
    dump("fourway", four_log);
  }
  if (!log) throw Error(ErrorCode::IoError, "cannot write training log");
  std::cerr << "model written to " << cfg.model << "\n";
  return 0;
}

AnyModel open_model(const PipelineConfig& cfg) {
  require(cfg.model, "--model");
  if (!fs::exists(cfg.model)) throw Error(ErrorCode::MalformedModel, "model file not found: " + cfg.model.string());
  AnyModel model = load_model(cfg.model);
  check_model(model, cfg);
  return model;
}

// Classifies and regionizes one image or frame sequence, writing
// <name>_classes.png and <name>_seg.png.
LabelImage segment_one(const std::vector<RgbImage>& frames, const AnyModel& model, const PipelineConfig& cfg,
                       const std::string& name) {
  const ClassMap classes = cfg.temporal() ? classify_edges_temporal(frames, model, cfg)
                                          : classify_edges(frames.back(), model, cfg);
  const LabelImage labels = segment(classes);
  save_png(cfg.out / (name + "_classes.png"), render_class_map(classes));
  save_label_png(cfg.out / (name + "_seg.png"), labels);
  return labels;
}

int cmd_segment(const Options& o) {
  const PipelineConfig cfg = resolve(o, load_config(o));
  require(cfg.input, "--input");
  require(cfg.out, "--out");
  const AnyModel model = open_model(cfg);
  const auto items = list_images(cfg.input);
  fs::create_directories(cfg.out);
  return run_items(
      items, cfg.out,
      [&](const ImageEntry& e) {
        const LabelImage labels = segment_one(load_item_frames(cfg, e), model, cfg, e.stem);
        std::vector<PlantMetrics> m;
        if (auto truth = find_truth(cfg.gt, e.stem)) m.push_back(evaluate_plant(e.stem, labels, *truth));
        return m;
      },
      !cfg.gt.empty());
}

int cmd_evaluate(const Options& o) {
  const PipelineConfig cfg = resolve(o, load_config(o));
  require(cfg.input, "--input");
  require(cfg.gt, "--gt");
  require(cfg.out, "--out");
  if (!fs::is_directory(cfg.input)) throw Error(ErrorCode::FileNotFound, "input directory " + cfg.input.string());
  std::vector<std::string> stems;
  for (const auto& e : fs::directory_iterator(cfg.input)) {
    const std::string name = e.path().filename().string();
    const std::string suffix = "_seg.png";
    if (e.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) {
      stems.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(stems.begin(), stems.end());
  fs::create_directories(cfg.out);
  std::vector<PlantMetrics> records;
  for (const auto& stem : stems) {
    auto truth = find_truth(cfg.gt, stem);
    if (!truth) {
      std::cerr << stem << ": no ground truth, skipped\n";
      continue;
    }
    const LabelImage pred = load_label_png(cfg.input / (stem + "_seg.png"));
    records.push_back(evaluate_plant(stem, pred, *truth));
  }
  write_report(cfg.out, std::move(records));
  return 0;
}

int cmd_overlay(const Options& o) {
  const PipelineConfig cfg = resolve(o, load_config(o));
  require(cfg.input, "--input");
  require(cfg.out, "--out");
  const fs::path layers = o.layers.empty() ? cfg.out : fs::path(o.layers);
  fs::create_directories(cfg.out);
  for (const auto& e : list_images(cfg.input)) {
    const RgbImage image = load_png(e.path);
    const fs::path classes = layers / (e.stem + "_classes.png");
    const fs::path seg = layers / (e.stem + "_seg.png");
    if (fs::exists(classes)) {
      save_png(cfg.out / (e.stem + "_classes_overlay.png"), overlay_class_map(image, class_map_from_colors(load_png(classes))));
    }
    if (fs::exists(seg)) {
      save_png(cfg.out / (e.stem + "_seg_overlay.png"), overlay_labels(image, load_label_png(seg)));
    }
  }
  return 0;
}

int cmd_undistort(const Options& o) {
  const PipelineConfig cfg = resolve(o, load_config(o));
  require(cfg.input, "--input");
  require(cfg.out, "--out");
  fs::create_directories(cfg.out);
  for (const auto& e : list_images(cfg.input)) {
    save_png(cfg.out / e.path.filename(), undistort(load_png(e.path), cfg.distortion));
  }
  return 0;
}

int cmd_split(const Options& o) {
  const PipelineConfig cfg = resolve(o, load_config(o));
  require(cfg.input, "--input");
  require(cfg.out, "--out");
  if (!cfg.grid) throw Error(ErrorCode::ConfigError, "split needs grid.* keys");
  fs::create_directories(cfg.out);
  const fs::path gt_dir = cfg.gt.empty() ? cfg.input : cfg.gt;
  for (const auto& e : list_images(cfg.input)) {
    for (const auto& cell : split_grid(load_png(e.path), *cfg.grid)) {
      save_png(cfg.out / (e.stem + "_cell" + std::to_string(cell.id) + ".png"), cell.image);
    }
    const fs::path gt = gt_dir / (e.stem + "_gt.png");
    if (fs::exists(gt)) {
      for (const auto& cell : split_grid(load_png(gt), *cfg.grid)) {
        save_png(cfg.out / (e.stem + "_cell" + std::to_string(cell.id) + "_gt.png"), cell.image);
      }
    }
  }
  return 0;
}

int cmd_pipeline(const Options& o) {
  const PipelineConfig cfg = resolve(o, load_config(o));
  require(cfg.input, "--input");
  require(cfg.out, "--out");
  const AnyModel model = open_model(cfg);
  const auto items = list_images(cfg.input);
  fs::create_directories(cfg.out);
  return run_items(
      items, cfg.out,
      [&](const ImageEntry& e) {
        std::vector<RgbImage> frames = load_item_frames(cfg, e);
        for (auto& f : frames) f = undistort(f, cfg.distortion);
        std::optional<LabelImage> truth = find_truth(cfg.gt, e.stem);
        std::vector<PlantMetrics> metrics;
        if (!cfg.grid) {
          const LabelImage labels = segment_one(frames, model, cfg, e.stem);
          if (truth) metrics.push_back(evaluate_plant(e.stem, labels, *truth));
          return metrics;
        }
        std::vector<std::vector<GridCell>> cells;
        for (const auto& f : frames) cells.push_back(split_grid(f, *cfg.grid));
        std::vector<GridCell> truth_cells;
        if (truth) truth_cells = split_grid(render_labels(*truth), *cfg.grid);
        for (std::size_t c = 0; c < cells.front().size(); ++c) {
          std::vector<RgbImage> cell_frames;
          for (const auto& per_frame : cells) cell_frames.push_back(per_frame[c].image);
          const std::string name = e.stem + "_cell" + std::to_string(cells.front()[c].id);
          const LabelImage labels = segment_one(cell_frames, model, cfg, name);
          if (truth) metrics.push_back(evaluate_plant(name, labels, labels_from_colors(truth_cells[c].image)));
        }
        return metrics;
      },
      !cfg.gt.empty());
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key=value config file");
  cmd->add_option("--input", o.input, "input directory");
  cmd->add_option("--gt", o.gt, "ground-truth directory (<stem>_gt.png)");
  cmd->add_option("--model", o.model, "model file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--mode", o.mode, "classifier: tree or fourway");
  cmd->add_option("--patch-size", o.patch_size, "patch side in pixels");
  cmd->add_option("--temporal", o.temporal, "frames per temporal patch (<stem>_frames/ directories)");
  cmd->add_option("--seed", o.seed, "seed for synthesis, balancing and training");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leaf segmentation by edge classification"};
  app.require_subcommand(1);
  Options o;
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"synth", "generate synthetic rosettes with ground truth", cmd_synth},
      {"train", "train edge classifiers from images and ground truth", cmd_train},
      {"segment", "classify edges and regionize into leaves", cmd_segment},
      {"evaluate", "score <stem>_seg.png files against ground truth", cmd_evaluate},
      {"overlay", "blend class maps and segmentations over images", cmd_overlay},
      {"undistort", "correct radial lens distortion", cmd_undistort},
      {"split", "cut tray images into per-plant cells", cmd_split},
      {"pipeline", "undistort, split, segment and evaluate", cmd_pipeline},
  };
  std::vector<std::pair<CLI::App*, int (*)(const Options&)>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o);
    if (std::string(c.name) == "overlay") sub->add_option("--layers", o.layers, "directory with _classes/_seg PNGs");
    subs.emplace_back(sub, c.run);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    for (const auto& [sub, run] : subs) {
      if (sub->parsed()) return run(o);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
