#include "leafseg/palette.hpp"

#include <algorithm>
#include <cmath>

#include "leafseg/error.hpp"

namespace leafseg {

Rgb edge_class_color(EdgeClass c) noexcept {
  switch (c) {
    case EdgeClass::Background: return {255, 165, 0};
    case EdgeClass::PlantEdge: return {255, 255, 255};
    case EdgeClass::LeafEdge: return {0, 255, 0};
    case EdgeClass::InternalNoise: return {255, 0, 0};
  }
  return {};
}

namespace {

std::array<Rgb, 64> make_leaf_palette() {
  // Golden-ratio hue walk over two brightness levels, quantised to multiples of 4.
  std::array<Rgb, 64> palette{};
  const double golden = 0.6180339887498949;
  for (int i = 0; i < 64; ++i) {
    const double hue = std::fmod(i * golden, 1.0) * 6.0;
    const double value = (i % 2 == 0) ? 1.0 : 0.7;
    const double sat = (i % 4 < 2) ? 0.85 : 0.55;
    const int sector = static_cast<int>(hue);
    const double f = hue - sector;
    const double p = value * (1 - sat);
    const double q = value * (1 - sat * f);
    const double t = value * (1 - sat * (1 - f));
    double r = 0, g = 0, b = 0;
    switch (sector % 6) {
      case 0: r = value, g = t, b = p; break;
      case 1: r = q, g = value, b = p; break;
      case 2: r = p, g = value, b = t; break;
      case 3: r = p, g = q, b = value; break;
      case 4: r = t, g = p, b = value; break;
      default: r = value, g = p, b = q; break;
    }
    auto quant = [](double v) { return static_cast<std::uint8_t>(std::clamp(4 * std::lround(v * 63.0), 4L, 252L)); };
    palette[static_cast<std::size_t>(i)] = {quant(r), quant(g), quant(b)};
  }
  return palette;
}

}  // namespace

const std::array<Rgb, 64>& leaf_palette() noexcept {
  static const std::array<Rgb, 64> palette = make_leaf_palette();
  return palette;
}

Rgb leaf_debug_color(std::int32_t label) noexcept {
  if (label <= 0) return {};
  return leaf_palette()[static_cast<std::size_t>((label - 1) % 64)];
}

Rgb label_color(std::int32_t label) noexcept {
  if (label <= 0) return {};
  if (label <= 64) return leaf_palette()[static_cast<std::size_t>(label - 1)];
  const auto k = static_cast<std::uint32_t>(label);
  return {static_cast<std::uint8_t>(k & 0xFF), static_cast<std::uint8_t>((k >> 8) & 0xFF),
          static_cast<std::uint8_t>(1 + 2 * ((k >> 16) & 0x7F))};
}

RgbImage render_class_map(const ClassMap& map) {
  RgbImage out(static_cast<int>(map.cols()), static_cast<int>(map.rows()));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      if (const auto c = decode(map(y, x))) {
        const Rgb color = edge_class_color(*c);
        out.set(x, y, color.r, color.g, color.b);
      }
    }
  }
  return out;
}

ClassMap class_map_from_colors(const RgbImage& img) {
  ClassMap map = empty_class_map(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Rgb px{img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
      if (px == Rgb{}) continue;
      bool matched = false;
      for (const EdgeClass c : kAllEdgeClasses) {
        if (edge_class_color(c) == px) {
          map(y, x) = encode(c);
          matched = true;
          break;
        }
      }
      if (!matched) throw Error(ErrorCode::InvalidArgument, "pixel colour is not an edge-class colour");
    }
  }
  return map;
}

namespace {

template <typename ColorFn>
RgbImage render_with(const LabelImage& labels, ColorFn color_of) {
  RgbImage out(static_cast<int>(labels.cols()), static_cast<int>(labels.rows()));
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const Rgb c = color_of(labels(y, x));
      out.set(x, y, c.r, c.g, c.b);
    }
  }
  return out;
}

void blend(RgbImage& img, int x, int y, Rgb color, double alpha) {
  const std::uint8_t src[3] = {color.r, color.g, color.b};
  for (int c = 0; c < 3; ++c) {
    const double v = (1.0 - alpha) * img.at(x, y, c) + alpha * src[c];
    img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
}

void require_same_size(const RgbImage& img, Eigen::Index rows, Eigen::Index cols) {
  if (img.height() != rows || img.width() != cols) {
    throw Error(ErrorCode::DimensionMismatch, "overlay map does not match image size");
  }
}

}  // namespace

RgbImage render_labels(const LabelImage& labels) { return render_with(labels, label_color); }

RgbImage render_labels_debug(const LabelImage& labels) { return render_with(labels, leaf_debug_color); }

RgbImage overlay_class_map(const RgbImage& img, const ClassMap& map, double alpha) {
  require_same_size(img, map.rows(), map.cols());
  RgbImage out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (const auto c = decode(map(y, x))) blend(out, x, y, edge_class_color(*c), alpha);
    }
  }
  return out;
}

RgbImage overlay_labels(const RgbImage& img, const LabelImage& labels, double alpha) {
  require_same_size(img, labels.rows(), labels.cols());
  RgbImage out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (labels(y, x) > 0) blend(out, x, y, leaf_debug_color(labels(y, x)), alpha);
    }
  }
  return out;
}

}  // namespace leafseg
