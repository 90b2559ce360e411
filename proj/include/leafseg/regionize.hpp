#pragma once

#include <cstdint>

#include "leafseg/classes.hpp"
#include "leafseg/image.hpp"

namespace leafseg {

/// Intermediate colouring between flood fill and the final labelling:
/// positive values are leaves, zero is background colour, negatives are
/// edge marks still awaiting resolution.
using RegionState = Plane<std::int32_t>;

inline constexpr std::int32_t kBackgroundColor = 0;
inline constexpr std::int32_t kPlantEdgeMark = -1;
inline constexpr std::int32_t kLeafEdgeMark = -2;
inline constexpr std::int32_t kBackgroundEdgeMark = -3;

/// Side of the square structuring element used throughout.
inline constexpr int kElementSide = 5;

/// Plant- or leaf-edge components (8-connected, per class) whose bounding box
/// fits a 5x5 window centred on them, with no pixel of the same class on that
/// window's border, take the most common class on the border (ties to the
/// lower class index) or become non-edge when the border is empty.
ClassMap remove_isolated_spots(const ClassMap& map);

/// Binary 5x5 dilation of LeafEdge over every other value.
ClassMap dilate_leaf_edges(const ClassMap& map);

/// Every pixel with a PlantEdge/LeafEdge inside its 5x5 neighbourhood is a
/// barrier. The remaining pixels form 4-connected regions; regions touching
/// the image border are background, the rest become leaves numbered 1.. in
/// row-major seed order. Barrier pixels keep their edge mark (background
/// edges get kBackgroundEdgeMark); barrier pixels that are not edges become
/// kLeafEdgeMark next to a leaf edge and kPlantEdgeMark otherwise, so the
/// later dilation steps can reclaim them.
RegionState flood_fill_leaves(const ClassMap& map);

/// Background edge marks become background colour.
RegionState remove_background_edges(RegionState state);

/// Phase 1 grows leaves one 8-neighbour ring per round over leaf-edge marks
/// only (lower label wins ties) until none are left or a round stalls;
/// leftovers become background. Phase 2 is one round over background and
/// plant-edge pixels touching a leaf (most frequent neighbour, then lower label).
RegionState inflate_leaves(RegionState state);

/// Remaining plant-edge marks take the leaf shared by >= 2 of their 8
/// neighbours (most frequent, then lower label) or background otherwise.
RegionState resolve_plant_edges(RegionState state);

struct RegionStages {
  ClassMap despotted;
  ClassMap dilated;
  RegionState filled;
  RegionState cleared;
  RegionState inflated;
  RegionState resolved;
  LabelImage labels;
};

RegionStages regionize_stages(const ClassMap& map);
LabelImage regionize(const ClassMap& map);

/// Background/leaf-edge/plant-edge colouring plus cycling leaf colours.
RgbImage render_region_state(const RegionState& state);

}  // namespace leafseg
