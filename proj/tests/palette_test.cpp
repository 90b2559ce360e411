#include <gtest/gtest.h>

#include <set>

#include "leafseg/error.hpp"
#include "leafseg/palette.hpp"
#include "leafseg/png_io.hpp"
#include "leafseg/rng.hpp"
#include "test_support.hpp"

namespace leafseg {
namespace {

using testing::random_image;
using testing::uniform_image;

TEST(Palette, EdgeClassColours) {
  EXPECT_EQ(edge_class_color(EdgeClass::PlantEdge), (Rgb{255, 255, 255}));
  EXPECT_EQ(edge_class_color(EdgeClass::LeafEdge), (Rgb{0, 255, 0}));
  EXPECT_EQ(edge_class_color(EdgeClass::Background), (Rgb{255, 165, 0}));
  EXPECT_EQ(edge_class_color(EdgeClass::InternalNoise), (Rgb{255, 0, 0}));
}

TEST(Palette, LeafPaletteDistinctAndCycling) {
  std::set<std::tuple<int, int, int>> seen;
  for (const Rgb& c : leaf_palette()) {
    EXPECT_EQ(c.r % 4, 0);
    EXPECT_EQ(c.g % 4, 0);
    EXPECT_EQ(c.b % 4, 0);
    EXPECT_NE(c, Rgb{});
    seen.insert({c.r, c.g, c.b});
  }
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_EQ(leaf_debug_color(1), leaf_debug_color(65));
  EXPECT_EQ(leaf_debug_color(0), Rgb{});
}

TEST(Palette, LabelColoursUnique) {
  std::set<std::tuple<int, int, int>> seen;
  for (const std::int32_t label : {1, 2, 63, 64, 65, 66, 255, 256, 300, 70000, 1 << 20}) {
    const Rgb c = label_color(label);
    EXPECT_TRUE(seen.insert({c.r, c.g, c.b}).second) << label;
    EXPECT_NE(c, Rgb{});
  }
}

TEST(Palette, ClassMapRoundTrip) {
  Rng rng(3);
  ClassMap map = empty_class_map(9, 7);
  for (Eigen::Index i = 0; i < map.size(); ++i) map.data()[i] = static_cast<std::int8_t>(rng.range(-1, 3));
  const ClassMap back = class_map_from_colors(render_class_map(map));
  EXPECT_TRUE((back == map).all());
  EXPECT_THROW(class_map_from_colors(uniform_image(2, 2, 1, 2, 3)), Error);
}

TEST(Palette, LabelRenderRoundTrip) {
  LabelImage labels = LabelImage::Zero(5, 5);
  labels(1, 1) = 2;
  labels(3, 3) = 70;
  labels(0, 4) = 70;
  const LabelImage back = labels_from_colors(render_labels(labels));
  EXPECT_EQ(testing::count_labels(back), 2);
  EXPECT_EQ(back(3, 3), back(0, 4));
  EXPECT_NE(back(1, 1), back(3, 3));
  EXPECT_EQ(back(0, 0), 0);
}

TEST(Overlay, EmptyMapLeavesImage) {
  Rng rng(8);
  const RgbImage img = random_image(rng, 10, 6);
  EXPECT_TRUE(overlay_class_map(img, empty_class_map(10, 6)) == img);
  EXPECT_TRUE(overlay_labels(img, LabelImage::Zero(6, 10)) == img);
}

TEST(Overlay, LeafEdgeMapTintsGreen) {
  const RgbImage img = uniform_image(4, 4, 100, 100, 100);
  const ClassMap map = ClassMap::Constant(4, 4, encode(EdgeClass::LeafEdge));
  const RgbImage out = overlay_class_map(img, map, 0.6);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(out.at(x, y, 0), 40);
      EXPECT_EQ(out.at(x, y, 1), 193);
      EXPECT_EQ(out.at(x, y, 2), 40);
    }
  }
}

TEST(Overlay, SizeChecked) {
  const RgbImage img = uniform_image(4, 4, 0, 0, 0);
  try {
    overlay_class_map(img, empty_class_map(5, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
  EXPECT_THROW(overlay_labels(img, LabelImage::Zero(4, 3)), Error);
}

}  // namespace
}  // namespace leafseg
