#pragma once

#include <array>
#include <cstdint>

#include "leafseg/classes.hpp"
#include "leafseg/image.hpp"

namespace leafseg {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Line-drawing colours for classified edges: plant edges white, leaf edges
/// green, background edges orange, internal noise red.
Rgb edge_class_color(EdgeClass c) noexcept;

/// Fixed 64-entry leaf palette; every channel is a multiple of 4.
const std::array<Rgb, 64>& leaf_palette() noexcept;

/// Debug colour for a leaf, cycling through the 64-entry palette.
Rgb leaf_debug_color(std::int32_t label) noexcept;

/// Colour unique to `label` (palette for 1..64, an odd-blue encoding above).
Rgb label_color(std::int32_t label) noexcept;

RgbImage render_class_map(const ClassMap& map);
/// Inverse of `render_class_map`; unknown colours raise InvalidArgument.
ClassMap class_map_from_colors(const RgbImage& img);

/// Distinct colours per label, black background (the ground-truth format).
RgbImage render_labels(const LabelImage& labels);
/// Same as `render_labels` but with the cycling debug palette.
RgbImage render_labels_debug(const LabelImage& labels);

/// Alpha-blends class colours over `img`; unclassified pixels are untouched.
RgbImage overlay_class_map(const RgbImage& img, const ClassMap& map, double alpha = 0.6);
RgbImage overlay_labels(const RgbImage& img, const LabelImage& labels, double alpha = 0.5);

}  // namespace leafseg
