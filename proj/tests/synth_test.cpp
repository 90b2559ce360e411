#include <gtest/gtest.h>

#include <functional>
#include <set>

#include "leafseg/edges.hpp"
#include "leafseg/error.hpp"
#include "leafseg/metrics.hpp"
#include "leafseg/patchgen.hpp"
#include "leafseg/png_io.hpp"
#include "leafseg/synth.hpp"
#include "test_support.hpp"

namespace leafseg {
namespace {

using testing::count_labels;
using testing::TempDir;

constexpr int kCanvas = 192;

/// Adjacent (4-neighbour) pixel pairs carrying two different leaf labels.
int leaf_boundary_pairs(const LabelImage& labels) {
  int n = 0;
  for (int y = 0; y < labels.rows(); ++y) {
    for (int x = 0; x < labels.cols(); ++x) {
      const auto v = labels(y, x);
      if (v == 0) continue;
      if (x + 1 < labels.cols() && labels(y, x + 1) != 0 && labels(y, x + 1) != v) ++n;
      if (y + 1 < labels.rows() && labels(y + 1, x) != 0 && labels(y + 1, x) != v) ++n;
    }
  }
  return n;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

TEST(Synth, SameSpecSameOutput) {
  PlantSpec spec;
  spec.seed = 42;
  const auto a = generate_plant(spec, kCanvas);
  const auto b = generate_plant(spec, kCanvas);
  EXPECT_TRUE(a.image == b.image);
  EXPECT_TRUE((a.truth == b.truth).all());
  spec.seed = 43;
  EXPECT_FALSE(generate_plant(spec, kCanvas).image == a.image);
}

TEST(Synth, SingleLeaf) {
  PlantSpec spec;
  spec.seed = 5;
  spec.leaf_count = 1;
  spec.overlap = 0.0;
  const auto a = generate_plant(spec, kCanvas);
  EXPECT_EQ(count_labels(a.truth), 1);
  EXPECT_DOUBLE_EQ(foreground_dice(a.truth, generate_plant(spec, kCanvas).truth), 1.0);
}

TEST(Synth, LabelsAreLeafIndices) {
  PlantSpec spec;
  spec.seed = 8;
  spec.leaf_count = 10;
  const auto a = generate_plant(spec, kCanvas);
  EXPECT_GE(a.truth.minCoeff(), 0);
  EXPECT_LE(a.truth.maxCoeff(), 10);
  EXPECT_GE(count_labels(a.truth), 8);
  EXPECT_EQ(a.image.width(), kCanvas);
  EXPECT_EQ(a.truth.rows(), kCanvas);
}

TEST(Synth, TruthCoversGreenLeafSurface) {
  PlantSpec spec;
  spec.seed = 17;
  spec.leaf_count = 9;
  const auto a = generate_plant(spec, kCanvas);
  for (int label = 1; label <= 9; ++label) {
    double r = 0, g = 0, b = 0;
    int n = 0;
    for (int y = 0; y < kCanvas; ++y) {
      for (int x = 0; x < kCanvas; ++x) {
        if (a.truth(y, x) != label) continue;
        r += a.image.at(x, y, 0);
        g += a.image.at(x, y, 1);
        b += a.image.at(x, y, 2);
        ++n;
      }
    }
    if (n == 0) continue;
    EXPECT_GT(g / n, 1.3 * r / n) << label;
    EXPECT_GT(g / n, 2.0 * b / n) << label;
  }
  // the canvas border is soil
  for (int i = 0; i < kCanvas; ++i) {
    EXPECT_EQ(a.truth(0, i), 0);
    EXPECT_EQ(a.truth(kCanvas - 1, i), 0);
  }
}

TEST(Synth, OverlapAddsLeafBoundaries) {
  for (const std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    PlantSpec spec;
    spec.seed = seed;
    spec.leaf_count = 8;
    spec.overlap = 0.0;
    const int loose = leaf_boundary_pairs(generate_plant(spec, kCanvas).truth);
    spec.overlap = 0.8;
    const int tight = leaf_boundary_pairs(generate_plant(spec, kCanvas).truth);
    EXPECT_GT(tight, loose) << "seed " << seed;
  }
}

TEST(Synth, CanvasTooSmall) {
  PlantSpec spec;
  EXPECT_EQ(code_of([&] { generate_plant(spec, 2 * spec.reach() + 3); }), ErrorCode::CanvasTooSmall);
  EXPECT_NO_THROW(generate_plant(spec, 2 * spec.reach() + 4));
}

TEST(Synth, InvalidSpecs) {
  PlantSpec spec;
  spec.leaf_count = 0;
  EXPECT_THROW(spec.validate(), Error);
  spec = PlantSpec{};
  spec.overlap = 1.5;
  EXPECT_THROW(spec.validate(), Error);
  spec = PlantSpec{};
  spec.leaf_length_min = 70;
  EXPECT_THROW(spec.validate(), Error);
  spec = PlantSpec{};
  spec.texture_amplitude = -1;
  EXPECT_THROW(spec.validate(), Error);
}

TEST(Synth, FramesEndOnThePlant) {
  PlantSpec spec;
  spec.seed = 9;
  const auto frames = generate_frames(spec, kCanvas, 4);
  ASSERT_EQ(frames.size(), 4u);
  EXPECT_TRUE(frames.back() == generate_plant(spec, kCanvas).image);
  EXPECT_FALSE(frames[0] == frames[3]);
  const auto again = generate_frames(spec, kCanvas, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(again[i] == frames[i]);
}

TEST(SynthDataset, ManifestDeterministicAndRoundTrips) {
  SpecRanges ranges;
  ranges.overlap_min = 0.2;
  ranges.overlap_max = 0.6;
  const auto m1 = sample_manifest(5, ranges, 77, kCanvas);
  const auto m2 = sample_manifest(5, ranges, 77, kCanvas);
  ASSERT_EQ(m1.size(), 5u);
  EXPECT_EQ(manifest_to_string(m1), manifest_to_string(m2));
  for (const auto& e : m1) {
    EXPECT_GE(e.spec.leaf_count, 8);
    EXPECT_LE(e.spec.leaf_count, 12);
    EXPECT_GE(e.spec.overlap, 0.2);
    EXPECT_LE(e.spec.overlap, 0.6);
  }
  const auto back = manifest_from_config(KeyValueConfig::parse(manifest_to_string(m1)));
  ASSERT_EQ(back.size(), m1.size());
  EXPECT_EQ(manifest_to_string(back), manifest_to_string(m1));
  for (std::size_t i = 0; i < m1.size(); ++i) {
    EXPECT_EQ(back[i].spec.seed, m1[i].spec.seed);
    EXPECT_EQ(back[i].spec.overlap, m1[i].spec.overlap);
    EXPECT_TRUE(generate_plant(back[i].spec, back[i].canvas).image == generate_plant(m1[i].spec, kCanvas).image);
  }
  EXPECT_NE(manifest_to_string(sample_manifest(5, ranges, 78, kCanvas)), manifest_to_string(m1));
}

TEST(SynthDataset, SinglePlant) {
  std::vector<ManifestEntry> manifest;
  const auto plants = generate_dataset(1, SpecRanges{}, 3, kCanvas, &manifest);
  EXPECT_EQ(plants.size(), 1u);
  EXPECT_EQ(manifest.size(), 1u);
  EXPECT_TRUE(plants[0].image == generate_plant(manifest[0].spec, kCanvas).image);
}

TEST(SynthDataset, AllEdgeClassesOccur) {
  SpecRanges ranges;
  ranges.overlap_min = 0.4;
  ranges.overlap_max = 0.4;
  const auto plants = generate_dataset(20, ranges, 11, kCanvas);
  CannyParams params;
  params.sigma = 1.0;
  params.low = 0.01;
  params.high = 0.03;
  std::set<EdgeClass> seen;
  for (const auto& p : plants) {
    const EdgeMap edges = canny(to_grayscale(p.image), params);
    for (int y = 0; y < edges.height(); ++y) {
      for (int x = 0; x < edges.width(); ++x) {
        if (edges.mask(y, x)) seen.insert(label_edge_pixel(p.truth, {x, y}, 2));
      }
    }
  }
  EXPECT_EQ(seen.size(), 4u);
}

TEST(SynthDataset, WriteLayout) {
  TempDir dir("synth");
  const auto manifest = sample_manifest(2, SpecRanges{}, 5, 160);
  write_dataset(dir.path(), manifest, 3);
  for (const char* name : {"plant_0.png", "plant_0_gt.png", "plant_1.png", "plant_1_gt.png", "manifest.txt",
                           "plant_0_frames/frame_000.png", "plant_1_frames/frame_002.png"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  const auto plant = generate_plant(manifest[1].spec, 160);
  EXPECT_TRUE(load_png(dir / "plant_1.png") == plant.image);
  EXPECT_TRUE((load_label_png(dir / "plant_1_gt.png") > 0).cwiseEqual(plant.truth > 0).all());
  EXPECT_TRUE(load_png(dir / "plant_1_frames/frame_002.png") == plant.image);
}

}  // namespace
}  // namespace leafseg
