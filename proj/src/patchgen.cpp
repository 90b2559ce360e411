#include "leafseg/patchgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "leafseg/error.hpp"
#include "leafseg/rng.hpp"

namespace leafseg {

Patch extract_patch(const RgbImage& img, PixelCoord center, int side) {
  if (!img.contains(center.x, center.y)) throw Error(ErrorCode::CenterOutOfBounds, "patch centre outside image");
  if (side < 1) throw Error(ErrorCode::InvalidArgument, "patch side must be >= 1");
  Patch patch{side, side, 3, Eigen::VectorXf(side * side * 3)};
  const int x0 = center.x - side / 2;
  const int y0 = center.y - side / 2;
  for (int r = 0; r < side; ++r) {
    const int y = std::clamp(y0 + r, 0, img.height() - 1);
    for (int col = 0; col < side; ++col) {
      const int x = std::clamp(x0 + col, 0, img.width() - 1);
      for (int c = 0; c < 3; ++c) patch.at(c, r, col) = static_cast<float>(img.at(x, y, c) / 255.0);
    }
  }
  return patch;
}

namespace {

double sample_replicated(const RgbImage& img, double sx, double sy, int c) {
  const double cx = std::clamp(sx, 0.0, static_cast<double>(img.width() - 1));
  const double cy = std::clamp(sy, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = static_cast<int>(std::floor(cx));
  const int y0 = static_cast<int>(std::floor(cy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
  const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
  return (1 - fy) * top + fy * bottom;
}

}  // namespace

Patch extract_temporal_patch(std::span<const RgbImage> frames, PixelCoord center, double orientation, int length) {
  if (frames.empty()) throw Error(ErrorCode::EmptyFrameList, "temporal patch needs frames");
  if (frames.size() < 2) throw Error(ErrorCode::InvalidArgument, "temporal patch needs at least 2 frames");
  if (length < 2) throw Error(ErrorCode::InvalidArgument, "temporal patch length must be >= 2");
  for (const auto& f : frames) {
    if (f.width() != frames[0].width() || f.height() != frames[0].height()) {
      throw Error(ErrorCode::DimensionMismatch, "temporal frames differ in size");
    }
  }
  if (!frames[0].contains(center.x, center.y)) {
    throw Error(ErrorCode::CenterOutOfBounds, "patch centre outside image");
  }
  const int n_frames = static_cast<int>(frames.size());
  Patch patch{length, n_frames, 3, Eigen::VectorXf(length * n_frames * 3)};
  const double ux = std::cos(orientation);
  const double uy = std::sin(orientation);
  for (int i = 0; i < length; ++i) {
    const double t = i - length / 2;
    const double sx = center.x + t * ux;
    const double sy = center.y + t * uy;
    for (int f = 0; f < n_frames; ++f) {
      for (int c = 0; c < 3; ++c) {
        patch.at(c, i, f) = static_cast<float>(sample_replicated(frames[static_cast<std::size_t>(f)], sx, sy, c) / 255.0);
      }
    }
  }
  return patch;
}

void normalize_patch(Patch& patch) {
  const Eigen::Index plane = static_cast<Eigen::Index>(patch.rows) * patch.cols;
  for (int c = 0; c < patch.channels; ++c) {
    auto channel = patch.values.segment(c * plane, plane);
    channel.array() -= channel.mean();
  }
}

EdgeClass label_edge_pixel(const LabelImage& gt, PixelCoord p, int radius) {
  const int h = static_cast<int>(gt.rows());
  const int w = static_cast<int>(gt.cols());
  if (p.x < 0 || p.y < 0 || p.x >= w || p.y >= h) throw Error(ErrorCode::OutOfBounds, "pixel outside ground truth");
  bool has_background = false;
  std::int32_t first_leaf = 0;
  bool several_leaves = false;
  for (int y = std::max(0, p.y - radius); y <= std::min(h - 1, p.y + radius); ++y) {
    for (int x = std::max(0, p.x - radius); x <= std::min(w - 1, p.x + radius); ++x) {
      const std::int32_t label = gt(y, x);
      if (label == 0) {
        has_background = true;
      } else if (first_leaf == 0) {
        first_leaf = label;
      } else if (label != first_leaf) {
        several_leaves = true;
      }
    }
  }
  if (first_leaf == 0) return EdgeClass::Background;
  if (has_background) return EdgeClass::PlantEdge;
  if (several_leaves) return EdgeClass::LeafEdge;
  return EdgeClass::InternalNoise;
}

std::array<std::size_t, kEdgeClassCount> PatchDataset::histogram() const {
  std::array<std::size_t, kEdgeClassCount> h{};
  for (const auto& item : items) ++h[static_cast<std::size_t>(index_of(item.label))];
  return h;
}

PatchDataset balance_dataset(PatchDataset data, const BalanceStrategy& strategy) {
  if (!strategy.enabled || data.empty()) return data;
  if (!(strategy.max_ratio >= 1.0)) throw Error(ErrorCode::InvalidArgument, "balance ratio must be >= 1");
  const auto hist = data.histogram();
  std::size_t smallest = 0;
  for (const std::size_t n : hist) {
    if (n > 0 && (smallest == 0 || n < smallest)) smallest = n;
  }
  const auto cap = static_cast<std::size_t>(std::floor(strategy.max_ratio * static_cast<double>(smallest)));

  Rng rng(strategy.seed);
  std::vector<char> keep(data.items.size(), 1);
  for (const EdgeClass c : kAllEdgeClasses) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.items.size(); ++i) {
      if (data.items[i].label == c) members.push_back(i);
    }
    if (members.size() <= cap) continue;
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t i = cap; i < members.size(); ++i) keep[members[i]] = 0;
  }
  std::vector<LabeledPatch> kept;
  kept.reserve(cap * kEdgeClassCount);
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    if (keep[i]) kept.push_back(std::move(data.items[i]));
  }
  data.items = std::move(kept);
  return data;
}

namespace {

void require_same_size(const RgbImage& img, const LabelImage& gt) {
  if (img.width() != gt.cols() || img.height() != gt.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "image and ground truth differ in size");
  }
}

}  // namespace

PatchDataset build_training_set(std::span<const TrainingPair> pairs, const PatchOptions& options) {
  PatchDataset data;
  data.side = options.side;
  for (std::size_t id = 0; id < pairs.size(); ++id) {
    const auto& [image, truth] = pairs[id];
    require_same_size(image, truth);
    const EdgeMap edges = canny(to_grayscale(image), options.canny);
    for (int y = 0; y < edges.height(); ++y) {
      for (int x = 0; x < edges.width(); ++x) {
        if (!edges.mask(y, x)) continue;
        LabeledPatch item{extract_patch(image, {x, y}, options.side), label_edge_pixel(truth, {x, y}, options.radius),
                          static_cast<std::uint32_t>(id), {x, y}};
        normalize_patch(item.patch);
        data.items.push_back(std::move(item));
      }
    }
  }
  return balance_dataset(std::move(data), options.balance);
}

PatchDataset build_temporal_training_set(std::span<const TemporalPair> sequences, const PatchOptions& options,
                                         int frames) {
  if (frames < 2) throw Error(ErrorCode::InvalidArgument, "temporal datasets need >= 2 frames");
  PatchDataset data;
  data.side = options.side;
  data.frames = frames;
  for (std::size_t id = 0; id < sequences.size(); ++id) {
    const auto& seq = sequences[id];
    if (seq.frames.empty()) throw Error(ErrorCode::EmptyFrameList, "sequence without frames");
    if (static_cast<int>(seq.frames.size()) < frames) {
      throw Error(ErrorCode::InvalidArgument, "sequence shorter than the temporal frame count");
    }
    const std::span<const RgbImage> window(seq.frames.data() + seq.frames.size() - static_cast<std::size_t>(frames),
                                           static_cast<std::size_t>(frames));
    const RgbImage& newest = seq.frames.back();
    require_same_size(newest, seq.truth);
    const EdgeMap edges = canny(to_grayscale(newest), options.canny);
    for (int y = 0; y < edges.height(); ++y) {
      for (int x = 0; x < edges.width(); ++x) {
        if (!edges.mask(y, x)) continue;
        LabeledPatch item{extract_temporal_patch(window, {x, y}, edges.orientation(y, x), options.side),
                          label_edge_pixel(seq.truth, {x, y}, options.radius), static_cast<std::uint32_t>(id), {x, y}};
        normalize_patch(item.patch);
        data.items.push_back(std::move(item));
      }
    }
  }
  return balance_dataset(std::move(data), options.balance);
}

std::vector<std::uint8_t> serialize_dataset(const PatchDataset& data) {
  detail::ByteWriter w;
  w.magic("PDS1");
  w.u32(static_cast<std::uint32_t>(data.items.size()));
  w.u32(static_cast<std::uint32_t>(data.side));
  w.u32(static_cast<std::uint32_t>(data.frames));
  w.u32(static_cast<std::uint32_t>(data.channels));
  const Eigen::Index expected = static_cast<Eigen::Index>(data.side) * data.cols() * data.channels;
  for (const auto& item : data.items) {
    if (item.patch.size() != expected) throw Error(ErrorCode::ShapeMismatch, "patch does not match dataset geometry");
    w.u8(static_cast<std::uint8_t>(item.label));
    w.u32(item.image_id);
    w.u32(static_cast<std::uint32_t>(item.source.x));
    w.u32(static_cast<std::uint32_t>(item.source.y));
    for (const float v : item.patch.values) w.f32(v);
  }
  return std::move(w.bytes());
}

PatchDataset deserialize_dataset(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, ErrorCode::MalformedDataset);
  if (!r.magic("PDS1")) throw Error(ErrorCode::MalformedDataset, "bad magic");
  PatchDataset data;
  const std::uint32_t count = r.u32();
  data.side = static_cast<int>(r.u32());
  data.frames = static_cast<int>(r.u32());
  data.channels = static_cast<int>(r.u32());
  if (data.side < 1 || data.frames < 1 || data.channels < 1) throw Error(ErrorCode::MalformedDataset, "bad geometry");
  const int rows = data.side;
  const int cols = data.cols();
  const std::size_t values = static_cast<std::size_t>(rows) * cols * data.channels;
  if (r.remaining() != static_cast<std::size_t>(count) * (13 + 4 * values)) {
    throw Error(ErrorCode::MalformedDataset, "record section has the wrong length");
  }
  data.items.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    LabeledPatch item;
    const std::uint8_t label = r.u8();
    if (label >= kEdgeClassCount) throw Error(ErrorCode::MalformedDataset, "label out of range");
    item.label = static_cast<EdgeClass>(label);
    item.image_id = r.u32();
    item.source.x = static_cast<int>(r.u32());
    item.source.y = static_cast<int>(r.u32());
    item.patch = Patch{rows, cols, data.channels, Eigen::VectorXf(static_cast<Eigen::Index>(values))};
    for (auto& v : item.patch.values) v = r.f32();
    data.items.push_back(std::move(item));
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const PatchDataset& data) {
  detail::write_file(path, serialize_dataset(data));
}

PatchDataset load_dataset(const std::filesystem::path& path) {
  return deserialize_dataset(detail::read_file(path));
}

}  // namespace leafseg
