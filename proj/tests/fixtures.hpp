#pragma once

#include <cmath>
#include <numbers>

#include "leafseg/classes.hpp"
#include "leafseg/image.hpp"
#include "leafseg/rng.hpp"

namespace leafseg::testing {

inline void draw_circle(ClassMap& map, double cx, double cy, double r, EdgeClass cls) {
  const int steps = static_cast<int>(std::ceil(16.0 * r)) + 8;
  for (int i = 0; i < steps; ++i) {
    const double t = 2.0 * std::numbers::pi * i / steps;
    const int x = static_cast<int>(std::lround(cx + r * std::cos(t)));
    const int y = static_cast<int>(std::lround(cy + r * std::sin(t)));
    if (x >= 0 && y >= 0 && x < map.cols() && y < map.rows()) map(y, x) = encode(cls);
  }
}

/// One plant-edge circle of radius 20 in a 64x64 map.
inline ClassMap closed_contour_fixture() {
  ClassMap map = empty_class_map(64, 64);
  draw_circle(map, 32, 32, 20, EdgeClass::PlantEdge);
  return map;
}

/// Outline of two overlapping discs (plant edge) split by their common
/// chord (leaf edge); 80x48.
inline ClassMap two_lobe_fixture() {
  ClassMap map = empty_class_map(80, 48);
  constexpr double r = 16.0;
  const double cx[2] = {26.0, 54.0};
  constexpr double cy = 24.0;
  const int steps = 400;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < steps; ++i) {
      const double t = 2.0 * std::numbers::pi * i / steps;
      const double x = cx[k] + r * std::cos(t);
      const double y = cy + r * std::sin(t);
      const double other = std::hypot(x - cx[1 - k], y - cy);
      if (other < r) continue;
      map(static_cast<int>(std::lround(y)), static_cast<int>(std::lround(x))) = encode(EdgeClass::PlantEdge);
    }
  }
  const int half_chord = static_cast<int>(std::ceil(std::sqrt(r * r - 14.0 * 14.0)));
  for (int y = 24 - half_chord; y <= 24 + half_chord; ++y) map(y, 40) = encode(EdgeClass::LeafEdge);
  return map;
}

/// Independent per-pixel draws from {none, Background, PlantEdge, LeafEdge, InternalNoise}.
inline ClassMap random_class_map(Rng& rng, int w, int h, double edge_density) {
  ClassMap map = empty_class_map(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (rng.uniform() < edge_density) map(y, x) = static_cast<std::int8_t>(rng.below(kEdgeClassCount));
    }
  }
  return map;
}

/// Edge map of a label image: pixels whose right or lower neighbour differs
/// become PlantEdge (leaf against background) or LeafEdge (leaf against leaf).
inline ClassMap edges_from_labels(const LabelImage& labels) {
  const int h = static_cast<int>(labels.rows());
  const int w = static_cast<int>(labels.cols());
  ClassMap map = empty_class_map(w, h);
  auto mark = [&](int x, int y, std::int32_t a, std::int32_t b) {
    if (a == b) return;
    const EdgeClass c = (a == 0 || b == 0) ? EdgeClass::PlantEdge : EdgeClass::LeafEdge;
    if (map(y, x) != encode(EdgeClass::LeafEdge)) map(y, x) = encode(c);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x + 1 < w) mark(x, y, labels(y, x), labels(y, x + 1));
      if (y + 1 < h) mark(x, y, labels(y, x), labels(y + 1, x));
    }
  }
  return map;
}

/// Two overlapping ellipses; the second (label 2) is drawn on top.
inline LabelImage two_ellipse_labels(int w, int h) {
  LabelImage out = LabelImage::Zero(h, w);
  auto inside = [](double x, double y, double cx, double cy, double a, double b) {
    const double u = (x - cx) / a, v = (y - cy) / b;
    return u * u + v * v <= 1.0;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (inside(x, y, w * 0.38, h * 0.5, w * 0.22, h * 0.3)) out(y, x) = 1;
      if (inside(x, y, w * 0.62, h * 0.5, w * 0.2, h * 0.28)) out(y, x) = 2;
    }
  }
  return out;
}

}  // namespace leafseg::testing
