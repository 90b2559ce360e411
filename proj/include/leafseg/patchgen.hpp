#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "leafseg/classes.hpp"
#include "leafseg/edges.hpp"
#include "leafseg/image.hpp"

namespace leafseg {

/// Network input: `channels` planes of `rows` x `cols`, stored channel-major
/// (c, row, col). Single-frame patches are side x side; temporal patches are
/// length (samples along the edge normal) x frames.
struct Patch {
  int rows = 0;
  int cols = 0;
  int channels = 3;
  Eigen::VectorXf values;

  float& at(int c, int r, int col) { return values(index(c, r, col)); }
  float at(int c, int r, int col) const { return values(index(c, r, col)); }
  Eigen::Index size() const noexcept { return values.size(); }

 private:
  Eigen::Index index(int c, int r, int col) const noexcept {
    return (static_cast<Eigen::Index>(c) * rows + r) * cols + col;
  }
};

/// side x side window centred on `center` (index side/2 for even sides),
/// replicated past the image border, channels scaled to [0, 1].
Patch extract_patch(const RgbImage& img, PixelCoord center, int side);

/// `length` bilinear samples, 1 px apart, along the line through `center` in
/// direction `orientation`; the same positions are read from every frame.
/// Result is length x frames, frames ordered oldest to newest.
Patch extract_temporal_patch(std::span<const RgbImage> frames, PixelCoord center, double orientation, int length);

/// Per-channel mean subtraction, applied to every patch fed to a network.
void normalize_patch(Patch& patch);

/// Derives the class of an edge pixel from the ground-truth labels found in
/// its (2r+1)^2 neighbourhood (clipped at the image border).
EdgeClass label_edge_pixel(const LabelImage& gt, PixelCoord p, int radius);

struct LabeledPatch {
  Patch patch;
  EdgeClass label = EdgeClass::Background;
  std::uint32_t image_id = 0;
  PixelCoord source;
};

struct PatchDataset {
  int side = 0;      // rows of every patch
  int frames = 1;    // 1 for single-frame data, otherwise the column count
  int channels = 3;
  std::vector<LabeledPatch> items;

  int cols() const noexcept { return frames == 1 ? side : frames; }
  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
  std::array<std::size_t, kEdgeClassCount> histogram() const;
};

/// Random undersampling: every class is cut down to at most
/// `max_ratio` times the smallest non-empty class.
struct BalanceStrategy {
  bool enabled = true;
  double max_ratio = 1.0;
  std::uint64_t seed = 0;
};

struct TrainingPair {
  RgbImage image;
  LabelImage truth;
};

/// One plant seen over time; the newest frame is the one the edges and the
/// ground truth refer to.
struct TemporalPair {
  std::vector<RgbImage> frames;
  LabelImage truth;
};

struct PatchOptions {
  CannyParams canny;
  int side = 16;
  int radius = 2;
  BalanceStrategy balance;
};

PatchDataset build_training_set(std::span<const TrainingPair> pairs, const PatchOptions& options);
PatchDataset build_temporal_training_set(std::span<const TemporalPair> sequences, const PatchOptions& options,
                                         int frames);

/// Keeps a seeded random subset so no class exceeds the ratio; original order is preserved.
PatchDataset balance_dataset(PatchDataset data, const BalanceStrategy& strategy);

/// Binary `PDS1` file (little-endian). Byte-identical for identical datasets.
void save_dataset(const std::filesystem::path& path, const PatchDataset& data);
PatchDataset load_dataset(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_dataset(const PatchDataset& data);
PatchDataset deserialize_dataset(std::span<const std::uint8_t> bytes);

}  // namespace leafseg
