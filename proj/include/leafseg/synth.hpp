#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "leafseg/config.hpp"
#include "leafseg/image.hpp"

namespace leafseg {

struct PlantSpec {
  std::uint64_t seed = 0;
  int leaf_count = 8;
  double leaf_length_min = 40.0;  // blade length in pixels
  double leaf_length_max = 60.0;
  double leaf_width_min = 22.0;   // blade width in pixels
  double leaf_width_max = 32.0;
  double angular_jitter = 0.25;   // radians
  double overlap = 0.3;           // [0, 1]; shorter petioles, blades slid inward and widened
  double texture_amplitude = 10.0;  // soil noise, grey levels

  /// Pixels the plant may reach from its centre.
  int reach() const;
  void validate() const;
};

struct SyntheticPlant {
  RgbImage image;
  LabelImage truth;
};

/// Leaves are ellipses on petioles placed at golden-angle increments and drawn
/// oldest (largest) first, so newer leaves occlude older ones. Labels mark the
/// visible surface only. Geometry is rasterised in integer fixed point and all
/// randomness comes from the spec seed.
SyntheticPlant generate_plant(const PlantSpec& spec, int canvas);

/// Time-lapse stand-in: the same plant re-rendered with per-frame brightness
/// jitter and fresh sensor noise, oldest first.
std::vector<RgbImage> generate_frames(const PlantSpec& spec, int canvas, int frames);

struct SpecRanges {
  int leaf_count_min = 8;
  int leaf_count_max = 12;
  double overlap_min = 0.3;
  double overlap_max = 0.3;
  PlantSpec base;  // lengths, widths, jitter and texture are copied from here
};

struct ManifestEntry {
  int index = 0;
  int canvas = 0;
  PlantSpec spec;
};

/// n plant specs drawn from `ranges` by a master generator seeded with `seed`.
std::vector<ManifestEntry> sample_manifest(int n, const SpecRanges& ranges, std::uint64_t seed, int canvas);

std::vector<SyntheticPlant> generate_dataset(int n, const SpecRanges& ranges, std::uint64_t seed, int canvas,
                                             std::vector<ManifestEntry>* manifest = nullptr);

std::string manifest_to_string(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> manifest_from_config(const KeyValueConfig& cfg);

/// Writes plant_<k>.png, plant_<k>_gt.png and manifest.txt; with frames > 1
/// also plant_<k>_frames/frame_<j>.png (oldest first, the last equal in
/// geometry to plant_<k>.png).
void write_dataset(const std::filesystem::path& dir, const std::vector<ManifestEntry>& manifest, int frames = 0);

}  // namespace leafseg
