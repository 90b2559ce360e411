#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "leafseg/classes.hpp"
#include "leafseg/cnn.hpp"
#include "leafseg/config.hpp"
#include "leafseg/edges.hpp"
#include "leafseg/error.hpp"
#include "leafseg/image.hpp"
#include "leafseg/model_io.hpp"
#include "leafseg/patchgen.hpp"

namespace leafseg {

enum class ClassifierMode { Tree, Fourway };

ClassifierMode parse_mode(const std::string& text);
std::string to_string(ClassifierMode mode);

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path gt;
  std::filesystem::path model;
  std::filesystem::path out;
  CannyParams canny;
  int patch_side = 16;
  int label_radius = 2;
  BalanceStrategy balance;
  ClassifierMode mode = ClassifierMode::Tree;
  int temporal_frames = 0;  // 0 = single-frame patches
  TrainConfig train;
  int final_filters = 32;
  std::optional<GridSpec> grid;
  DistortionParams distortion;

  bool temporal() const noexcept { return temporal_frames > 0; }
  PatchOptions patch_options() const;
  void validate() const;
};

/// Keys: mode, temporal, canny.{sigma,low,high}, patch.{side,radius,balance,max_ratio},
/// train.{lr,momentum,epochs,batch,seed,init_scale,filters}, grid.*, distortion.*,
/// paths.{input,gt,model,out}. Missing keys keep the defaults.
PipelineConfig pipeline_config_from(const KeyValueConfig& cfg);

/// Maps a library error onto the CLI exit status: 1 config, 2 I/O, 3 model/shape.
int exit_code_for(ErrorCode code) noexcept;

/// Tray number and timestamp parsed from names like `tray03_2013-05-14_10-30.png`
/// (`tray`, optional separator, digits, then date and time with `-`/`_` separators).
struct AledName {
  int tray = 0;
  std::string timestamp;  // YYYYMMDDhhmmss, seconds 00 when absent
};

std::optional<AledName> parse_aled_name(const std::string& filename);

/// Tray, then timestamp, for parseable names; unparseable names sort after
/// them lexicographically.
void sort_by_acquisition(std::vector<std::filesystem::path>& files);

struct ImageEntry {
  std::string stem;
  std::filesystem::path path;
};

/// `*.png` files in `dir`, skipping ground truth and pipeline outputs, ordered by stem.
std::vector<ImageEntry> list_images(const std::filesystem::path& dir);

/// `<dir>/<stem>_frames/*.png` in acquisition order.
std::vector<RgbImage> load_frame_sequence(const std::filesystem::path& dir, const std::string& stem);

/// Shape checks between a loaded model and the configured mode / patch shape.
void check_model(const AnyModel& model, const PipelineConfig& cfg);

ClassMap classify_edges(const RgbImage& image, const AnyModel& model, const PipelineConfig& cfg);
/// Edges come from the newest frame; patches sample the last `cfg.temporal_frames` frames.
ClassMap classify_edges_temporal(std::span<const RgbImage> frames, const AnyModel& model, const PipelineConfig& cfg);

/// Classifier output for one image (or frame sequence) turned into a leaf labeling.
LabelImage segment(const ClassMap& classes);

AnyModel train_model(const PatchDataset& data, const PipelineConfig& cfg, TreeTrainLog* tree_log = nullptr,
                     TrainLog* fourway_log = nullptr);

/// Worker cap: LEAFSEG_THREADS when set to a positive integer, else the hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n) on at most `workers` threads. Results keep index
/// order; the first exception (by index) is rethrown after all workers stop.
template <typename Result>
std::vector<Result> parallel_map(std::size_t n, int workers, const std::function<Result(std::size_t)>& fn) {
  std::vector<std::optional<Result>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, workers));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(count, n); ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace leafseg
