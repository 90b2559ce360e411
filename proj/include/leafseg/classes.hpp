#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "leafseg/image.hpp"

namespace leafseg {

/// Four-way label of an edge pixel. The integer encoding is part of the
/// dataset and model file formats.
enum class EdgeClass : std::uint8_t {
  Background = 0,     // edge wholly outside the plant
  PlantEdge = 1,      // plant meets background
  LeafEdge = 2,       // boundary where one leaf overlaps another
  InternalNoise = 3,  // shadow, vein or highlight inside a single leaf
};

inline constexpr int kEdgeClassCount = 4;
inline constexpr std::array<EdgeClass, kEdgeClassCount> kAllEdgeClasses = {
    EdgeClass::Background, EdgeClass::PlantEdge, EdgeClass::LeafEdge, EdgeClass::InternalNoise};

constexpr int index_of(EdgeClass c) noexcept { return static_cast<int>(c); }

constexpr std::string_view to_string(EdgeClass c) noexcept {
  switch (c) {
    case EdgeClass::Background: return "Background";
    case EdgeClass::PlantEdge: return "PlantEdge";
    case EdgeClass::LeafEdge: return "LeafEdge";
    case EdgeClass::InternalNoise: return "InternalNoise";
  }
  return "?";
}

/// Per-pixel edge classification; kNoEdge where the pixel is not an edge.
using ClassMap = Plane<std::int8_t>;
inline constexpr std::int8_t kNoEdge = -1;

constexpr std::int8_t encode(EdgeClass c) noexcept { return static_cast<std::int8_t>(c); }

constexpr std::optional<EdgeClass> decode(std::int8_t v) noexcept {
  if (v < 0 || v >= kEdgeClassCount) return std::nullopt;
  return static_cast<EdgeClass>(v);
}

inline ClassMap empty_class_map(int width, int height) { return ClassMap::Constant(height, width, kNoEdge); }

}  // namespace leafseg
