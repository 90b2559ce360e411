#include "leafseg/regionize.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <vector>

#include "leafseg/palette.hpp"

namespace leafseg {

namespace {

constexpr int kHalf = kElementSide / 2;

template <typename T>
bool inside(const Plane<T>& p, int x, int y) {
  return x >= 0 && y >= 0 && x < p.cols() && y < p.rows();
}

bool is_structural(std::int8_t v) {
  return v == encode(EdgeClass::PlantEdge) || v == encode(EdgeClass::LeafEdge);
}

// Leaf among the 8 neighbours (read from `src`) chosen by count, then by
// lower label; 0 when fewer than `min_votes` neighbours share a leaf.
std::int32_t vote_leaf(const RegionState& src, int x, int y, int min_votes) {
  std::array<std::pair<std::int32_t, int>, 8> votes{};
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if ((dx == 0 && dy == 0) || !inside(src, x + dx, y + dy)) continue;
      const std::int32_t v = src(y + dy, x + dx);
      if (v <= 0) continue;
      auto it = std::find_if(votes.begin(), votes.begin() + n, [v](const auto& e) { return e.first == v; });
      if (it == votes.begin() + n) votes[static_cast<std::size_t>(n++)] = {v, 1};
      else ++it->second;
    }
  }
  std::int32_t best = 0;
  int best_count = 0;
  for (int i = 0; i < n; ++i) {
    const auto [label, count] = votes[static_cast<std::size_t>(i)];
    if (count > best_count || (count == best_count && label < best)) {
      best = label;
      best_count = count;
    }
  }
  return best_count >= min_votes ? best : 0;
}

}  // namespace

ClassMap remove_isolated_spots(const ClassMap& map) {
  const int h = static_cast<int>(map.rows());
  const int w = static_cast<int>(map.cols());
  ClassMap out = map;
  Plane<bool> seen = Plane<bool>::Constant(h, w, false);
  std::vector<PixelCoord> component;
  std::vector<PixelCoord> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::int8_t kind = map(sy, sx);
      if (seen(sy, sx) || !is_structural(kind)) continue;
      component.clear();
      stack.assign(1, {sx, sy});
      seen(sy, sx) = true;
      int min_x = sx, max_x = sx, min_y = sy, max_y = sy;
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        component.push_back(p);
        min_x = std::min(min_x, p.x), max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y), max_y = std::max(max_y, p.y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = p.x + dx, ny = p.y + dy;
            if (!inside(map, nx, ny) || seen(ny, nx) || map(ny, nx) != kind) continue;
            seen(ny, nx) = true;
            stack.push_back({nx, ny});
          }
        }
      }
      const int bw = max_x - min_x + 1;
      const int bh = max_y - min_y + 1;
      if (bw > kElementSide || bh > kElementSide) continue;

      const int x0 = min_x - (kElementSide - bw) / 2;
      const int y0 = min_y - (kElementSide - bh) / 2;
      std::array<int, kEdgeClassCount> border{};
      bool touches_same_kind = false;
      for (int y = y0; y < y0 + kElementSide; ++y) {
        for (int x = x0; x < x0 + kElementSide; ++x) {
          const bool on_border = x == x0 || y == y0 || x == x0 + kElementSide - 1 || y == y0 + kElementSide - 1;
          if (!on_border || !inside(map, x, y)) continue;
          if (std::find(component.begin(), component.end(), PixelCoord{x, y}) != component.end()) continue;
          const std::int8_t v = map(y, x);
          if (v == kind) touches_same_kind = true;
          if (v >= 0) ++border[static_cast<std::size_t>(v)];
        }
      }
      if (touches_same_kind) continue;
      std::int8_t replacement = kNoEdge;
      int best = 0;
      for (int c = 0; c < kEdgeClassCount; ++c) {
        if (border[static_cast<std::size_t>(c)] > best) {
          best = border[static_cast<std::size_t>(c)];
          replacement = static_cast<std::int8_t>(c);
        }
      }
      for (const PixelCoord& p : component) out(p.y, p.x) = replacement;
    }
  }
  return out;
}

ClassMap dilate_leaf_edges(const ClassMap& map) {
  const int h = static_cast<int>(map.rows());
  const int w = static_cast<int>(map.cols());
  ClassMap out = map;
  const std::int8_t leaf = encode(EdgeClass::LeafEdge);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (map(y, x) != leaf) continue;
      for (int yy = std::max(0, y - kHalf); yy <= std::min(h - 1, y + kHalf); ++yy) {
        for (int xx = std::max(0, x - kHalf); xx <= std::min(w - 1, x + kHalf); ++xx) out(yy, xx) = leaf;
      }
    }
  }
  return out;
}

RegionState flood_fill_leaves(const ClassMap& map) {
  const int h = static_cast<int>(map.rows());
  const int w = static_cast<int>(map.cols());
  const std::int8_t leaf_edge = encode(EdgeClass::LeafEdge);

  // Summed-area tables answer "any structural / leaf edge within 5x5" in O(1).
  Plane<int> structural_sum = Plane<int>::Zero(h + 1, w + 1);
  Plane<int> leaf_sum = Plane<int>::Zero(h + 1, w + 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      structural_sum(y + 1, x + 1) = structural_sum(y, x + 1) + structural_sum(y + 1, x) - structural_sum(y, x) +
                                     (is_structural(map(y, x)) ? 1 : 0);
      leaf_sum(y + 1, x + 1) =
          leaf_sum(y, x + 1) + leaf_sum(y + 1, x) - leaf_sum(y, x) + (map(y, x) == leaf_edge ? 1 : 0);
    }
  }
  auto window_count = [&](const Plane<int>& sum, int x, int y) {
    const int x0 = std::max(0, x - kHalf), x1 = std::min(w, x + kHalf + 1);
    const int y0 = std::max(0, y - kHalf), y1 = std::min(h, y + kHalf + 1);
    return sum(y1, x1) - sum(y0, x1) - sum(y1, x0) + sum(y0, x0);
  };

  constexpr std::int32_t kUnvisited = -100;
  RegionState state = RegionState::Constant(h, w, kUnvisited);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (window_count(structural_sum, x, y) == 0) continue;
      const auto cls = decode(map(y, x));
      if (cls == EdgeClass::PlantEdge) state(y, x) = kPlantEdgeMark;
      else if (cls == EdgeClass::LeafEdge) state(y, x) = kLeafEdgeMark;
      else if (cls == EdgeClass::Background) state(y, x) = kBackgroundEdgeMark;
      else state(y, x) = window_count(leaf_sum, x, y) > 0 ? kLeafEdgeMark : kPlantEdgeMark;
    }
  }

  std::int32_t next_leaf = 1;
  std::vector<PixelCoord> region;
  std::vector<PixelCoord> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      if (state(sy, sx) != kUnvisited) continue;
      region.clear();
      stack.assign(1, {sx, sy});
      state(sy, sx) = 0;
      bool touches_border = false;
      while (!stack.empty()) {
        const PixelCoord p = stack.back();
        stack.pop_back();
        region.push_back(p);
        touches_border = touches_border || p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1;
        constexpr int dxs[4] = {1, -1, 0, 0};
        constexpr int dys[4] = {0, 0, 1, -1};
        for (int i = 0; i < 4; ++i) {
          const int nx = p.x + dxs[i], ny = p.y + dys[i];
          if (!inside(state, nx, ny) || state(ny, nx) != kUnvisited) continue;
          state(ny, nx) = 0;
          stack.push_back({nx, ny});
        }
      }
      const std::int32_t label = touches_border ? kBackgroundColor : next_leaf++;
      for (const PixelCoord& p : region) state(p.y, p.x) = label;
    }
  }
  return state;
}

RegionState remove_background_edges(RegionState state) {
  state = (state == kBackgroundEdgeMark).select(kBackgroundColor, state);
  return state;
}

RegionState inflate_leaves(RegionState state) {
  const int h = static_cast<int>(state.rows());
  const int w = static_cast<int>(state.cols());
  std::vector<PixelCoord> frontier;
  for (;;) {
    frontier.clear();
    std::vector<std::int32_t> owners;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (state(y, x) != kLeafEdgeMark) continue;
        std::int32_t owner = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!inside(state, x + dx, y + dy)) continue;
            const std::int32_t v = state(y + dy, x + dx);
            if (v > 0 && (owner == 0 || v < owner)) owner = v;
          }
        }
        if (owner > 0) {
          frontier.push_back({x, y});
          owners.push_back(owner);
        }
      }
    }
    if (frontier.empty()) break;
    for (std::size_t i = 0; i < frontier.size(); ++i) state(frontier[i].y, frontier[i].x) = owners[i];
  }
  state = (state == kLeafEdgeMark).select(kBackgroundColor, state);

  const RegionState snapshot = state;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::int32_t v = snapshot(y, x);
      if (v != kBackgroundColor && v != kPlantEdgeMark) continue;
      if (const std::int32_t leaf = vote_leaf(snapshot, x, y, 1); leaf > 0) state(y, x) = leaf;
    }
  }
  return state;
}

RegionState resolve_plant_edges(RegionState state) {
  const RegionState snapshot = state;
  for (int y = 0; y < state.rows(); ++y) {
    for (int x = 0; x < state.cols(); ++x) {
      if (snapshot(y, x) != kPlantEdgeMark) continue;
      state(y, x) = vote_leaf(snapshot, x, y, 2);
    }
  }
  return state;
}

RegionStages regionize_stages(const ClassMap& map) {
  RegionStages s;
  s.despotted = remove_isolated_spots(map);
  s.dilated = dilate_leaf_edges(s.despotted);
  s.filled = flood_fill_leaves(s.dilated);
  s.cleared = remove_background_edges(s.filled);
  s.inflated = inflate_leaves(s.cleared);
  s.resolved = resolve_plant_edges(s.inflated);
  s.labels = s.resolved.cwiseMax(0);
  return s;
}

LabelImage regionize(const ClassMap& map) { return regionize_stages(map).labels; }

RgbImage render_region_state(const RegionState& state) {
  RgbImage out(static_cast<int>(state.cols()), static_cast<int>(state.rows()));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const std::int32_t v = state(y, x);
      Rgb c;
      if (v > 0) c = leaf_debug_color(v);
      else if (v == kPlantEdgeMark) c = edge_class_color(EdgeClass::PlantEdge);
      else if (v == kLeafEdgeMark) c = edge_class_color(EdgeClass::LeafEdge);
      else if (v == kBackgroundEdgeMark) c = edge_class_color(EdgeClass::Background);
      out.set(x, y, c.r, c.g, c.b);
    }
  }
  return out;
}

}  // namespace leafseg
