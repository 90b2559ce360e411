#include "leafseg/pipeline.hpp"

#include <cstdlib>
#include <regex>
#include <variant>

#include "leafseg/png_io.hpp"
#include "leafseg/regionize.hpp"

namespace leafseg {

namespace fs = std::filesystem;

ClassifierMode parse_mode(const std::string& text) {
  if (text == "tree") return ClassifierMode::Tree;
  if (text == "fourway") return ClassifierMode::Fourway;
  throw Error(ErrorCode::ConfigError, "mode must be tree or fourway, got '" + text + "'");
}

std::string to_string(ClassifierMode mode) { return mode == ClassifierMode::Tree ? "tree" : "fourway"; }

PatchOptions PipelineConfig::patch_options() const {
  PatchOptions o;
  o.canny = canny;
  o.side = patch_side;
  o.radius = label_radius;
  o.balance = balance;
  return o;
}

void PipelineConfig::validate() const {
  try {
    canny.validate();
    train.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (patch_side < 2) throw Error(ErrorCode::ConfigError, "patch side must be >= 2");
  if (label_radius < 0) throw Error(ErrorCode::ConfigError, "label radius must be >= 0");
  if (temporal_frames == 1 || temporal_frames < 0) throw Error(ErrorCode::ConfigError, "temporal needs >= 2 frames");
  if (final_filters < 1) throw Error(ErrorCode::ConfigError, "train.filters must be >= 1");
  if (balance.enabled && !(balance.max_ratio >= 1.0)) throw Error(ErrorCode::ConfigError, "patch.max_ratio must be >= 1");
}

PipelineConfig pipeline_config_from(const KeyValueConfig& cfg) {
  PipelineConfig p;
  p.input = cfg.get_string("paths.input", "");
  p.gt = cfg.get_string("paths.gt", "");
  p.model = cfg.get_string("paths.model", "");
  p.out = cfg.get_string("paths.out", "");
  p.mode = parse_mode(cfg.get_string("mode", "tree"));
  p.temporal_frames = static_cast<int>(cfg.get_int("temporal", 0));
  p.canny.sigma = cfg.get_double("canny.sigma", p.canny.sigma);
  p.canny.low = cfg.get_double("canny.low", p.canny.low);
  p.canny.high = cfg.get_double("canny.high", p.canny.high);
  p.patch_side = static_cast<int>(cfg.get_int("patch.side", p.patch_side));
  p.label_radius = static_cast<int>(cfg.get_int("patch.radius", p.label_radius));
  p.balance.enabled = cfg.get_bool("patch.balance", true);
  p.balance.max_ratio = cfg.get_double("patch.max_ratio", p.balance.max_ratio);
  p.train.learning_rate = cfg.get_double("train.lr", p.train.learning_rate);
  p.train.momentum = cfg.get_double("train.momentum", p.train.momentum);
  p.train.epochs = static_cast<int>(cfg.get_int("train.epochs", p.train.epochs));
  p.train.batch_size = static_cast<int>(cfg.get_int("train.batch", p.train.batch_size));
  p.train.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<long long>(p.train.seed)));
  p.train.init_scale = cfg.get_double("train.init_scale", p.train.init_scale);
  p.final_filters = static_cast<int>(cfg.get_int("train.filters", p.final_filters));
  p.balance.seed = p.train.seed;
  p.grid = grid_from_config(cfg.section("grid"));
  p.distortion = distortion_from_config(cfg.section("distortion"));
  return p;
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::MalformedPng:
    case ErrorCode::UnsupportedPng:
    case ErrorCode::IoError:
      return 2;
    case ErrorCode::MalformedModel:
    case ErrorCode::VersionMismatch:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::MalformedDataset:
      return 3;
    default:
      return 1;
  }
}

std::optional<AledName> parse_aled_name(const std::string& filename) {
  static const std::regex pattern(
      R"(tray[_-]?(\d+)[_-](\d{4})[-_]?(\d{2})[-_]?(\d{2})[-_T]?(\d{2})[-_:]?(\d{2})(?:[-_:]?(\d{2}))?)",
      std::regex::icase);
  std::smatch m;
  if (!std::regex_search(filename, m, pattern)) return std::nullopt;
  AledName out;
  out.tray = std::stoi(m[1].str());
  out.timestamp = m[2].str() + m[3].str() + m[4].str() + m[5].str() + m[6].str() + (m[7].matched ? m[7].str() : "00");
  return out;
}

void sort_by_acquisition(std::vector<fs::path>& files) {
  std::stable_sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    const auto na = parse_aled_name(a.filename().string());
    const auto nb = parse_aled_name(b.filename().string());
    if (na && nb) {
      if (na->tray != nb->tray) return na->tray < nb->tray;
      if (na->timestamp != nb->timestamp) return na->timestamp < nb->timestamp;
      return a.filename() < b.filename();
    }
    if (na.has_value() != nb.has_value()) return na.has_value();
    return a.filename() < b.filename();
  });
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_png(const fs::directory_entry& e) {
  std::string ext = e.path().extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return e.is_regular_file() && ext == ".png";
}

}  // namespace

std::vector<ImageEntry> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::FileNotFound, "input directory " + dir.string());
  std::vector<ImageEntry> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!is_png(e)) continue;
    const std::string stem = e.path().stem().string();
    if (ends_with(stem, "_gt") || ends_with(stem, "_seg") || ends_with(stem, "_classes") || ends_with(stem, "_overlay")) {
      continue;
    }
    out.push_back({stem, e.path()});
  }
  std::sort(out.begin(), out.end(), [](const ImageEntry& a, const ImageEntry& b) { return a.stem < b.stem; });
  return out;
}

std::vector<RgbImage> load_frame_sequence(const fs::path& dir, const std::string& stem) {
  const fs::path seq = dir / (stem + "_frames");
  if (!fs::is_directory(seq)) throw Error(ErrorCode::ConfigError, "temporal mode needs frame directory " + seq.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(seq)) {
    if (is_png(e)) files.push_back(e.path());
  }
  if (files.empty()) throw Error(ErrorCode::EmptyFrameList, seq.string());
  sort_by_acquisition(files);
  std::vector<RgbImage> frames;
  for (const auto& f : files) frames.push_back(load_png(f));
  return frames;
}

namespace {

Shape3 expected_shape(const PipelineConfig& cfg) {
  return {3, cfg.patch_side, cfg.temporal() ? cfg.temporal_frames : cfg.patch_side};
}

void check_network(const Model& net, const Shape3& shape, int arity, const char* role) {
  if (net.input_shape() != shape) {
    throw Error(ErrorCode::ShapeMismatch, std::string(role) + " network expects a different patch shape");
  }
  if (net.arity() != arity) throw Error(ErrorCode::ShapeMismatch, std::string(role) + " network has the wrong arity");
}

template <typename PatchFn>
ClassMap classify_with(const EdgeMap& edges, const AnyModel& model, PatchFn&& make_patch) {
  ClassMap out = empty_class_map(edges.width(), edges.height());
  for (int y = 0; y < edges.height(); ++y) {
    for (int x = 0; x < edges.width(); ++x) {
      if (!edges.mask(y, x)) continue;
      Patch patch = make_patch(x, y);
      normalize_patch(patch);
      const EdgeClass c = std::holds_alternative<ClassifierTree>(model)
                              ? classify_tree(std::get<ClassifierTree>(model), patch)
                              : classify_fourway(std::get<Model>(model), patch);
      out(y, x) = encode(c);
    }
  }
  return out;
}

}  // namespace

void check_model(const AnyModel& model, const PipelineConfig& cfg) {
  const Shape3 shape = expected_shape(cfg);
  if (cfg.mode == ClassifierMode::Tree) {
    const auto* tree = std::get_if<ClassifierTree>(&model);
    if (tree == nullptr) throw Error(ErrorCode::ShapeMismatch, "tree mode needs a tree model");
    check_network(tree->split, shape, 2, "split");
    check_network(tree->internal, shape, 2, "internal");
    check_network(tree->external, shape, 2, "external");
  } else {
    const auto* net = std::get_if<Model>(&model);
    if (net == nullptr) throw Error(ErrorCode::ShapeMismatch, "fourway mode needs a single network");
    check_network(*net, shape, kEdgeClassCount, "fourway");
  }
}

ClassMap classify_edges(const RgbImage& image, const AnyModel& model, const PipelineConfig& cfg) {
  const EdgeMap edges = canny(to_grayscale(image), cfg.canny);
  return classify_with(edges, model, [&](int x, int y) { return extract_patch(image, {x, y}, cfg.patch_side); });
}

ClassMap classify_edges_temporal(std::span<const RgbImage> frames, const AnyModel& model, const PipelineConfig& cfg) {
  if (frames.empty()) throw Error(ErrorCode::EmptyFrameList, "no frames to classify");
  const auto n = static_cast<std::size_t>(cfg.temporal_frames);
  if (frames.size() < n) throw Error(ErrorCode::ShapeMismatch, "sequence shorter than the temporal frame count");
  const auto window = frames.subspan(frames.size() - n, n);
  const EdgeMap edges = canny(to_grayscale(frames.back()), cfg.canny);
  return classify_with(edges, model, [&](int x, int y) {
    return extract_temporal_patch(window, {x, y}, edges.orientation(y, x), cfg.patch_side);
  });
}

LabelImage segment(const ClassMap& classes) { return regionize(classes); }

AnyModel train_model(const PatchDataset& data, const PipelineConfig& cfg, TreeTrainLog* tree_log,
                     TrainLog* fourway_log) {
  const Shape3 shape = patch_shape(data);
  if (cfg.mode == ClassifierMode::Tree) {
    return train_tree(data, default_architecture(shape, 2, cfg.final_filters), cfg.train, tree_log);
  }
  return train_fourway(data, default_architecture(shape, kEdgeClassCount, cfg.final_filters), cfg.train, fourway_log);
}

int worker_count() {
  if (const char* env = std::getenv("LEAFSEG_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace leafseg
