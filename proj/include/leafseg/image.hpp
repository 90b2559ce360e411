#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace leafseg {

/// Single-channel raster indexed (y, x), stored row-major.
template <typename T>
using Plane = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Intensities in [0, 1].
using GrayImage = Plane<double>;

/// 0 is background, k >= 1 identifies a leaf. Labels need not be contiguous.
using LabelImage = Plane<std::int32_t>;

struct PixelCoord {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

class RgbImage {
 public:
  /// One row per pixel (row-major scan), one column per channel.
  using Buffer = Eigen::Array<std::uint8_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

  RgbImage() = default;
  RgbImage(int width, int height);
  RgbImage(int width, int height, Buffer pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::uint8_t& at(int x, int y, int channel) { return pixels_(index(x, y), channel); }
  std::uint8_t at(int x, int y, int channel) const { return pixels_(index(x, y), channel); }

  auto pixel(int x, int y) { return pixels_.row(index(x, y)); }
  auto pixel(int x, int y) const { return pixels_.row(index(x, y)); }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const Eigen::Index i = index(x, y);
    pixels_(i, 0) = r;
    pixels_(i, 1) = g;
    pixels_(i, 2) = b;
  }

  const Buffer& pixels() const noexcept { return pixels_; }
  Buffer& pixels() noexcept { return pixels_; }

  /// Interleaved RGB bytes, width * height * 3 of them.
  std::span<const std::uint8_t> bytes() const noexcept {
    return {pixels_.data(), static_cast<std::size_t>(pixels_.size())};
  }

  friend bool operator==(const RgbImage& a, const RgbImage& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && (a.pixels_ == b.pixels_).all();
  }

 private:
  Eigen::Index index(int x, int y) const noexcept {
    return static_cast<Eigen::Index>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  Buffer pixels_;
};

/// Two-term radial lens model. r is normalised by the half-diagonal of the
/// image; an unset centre means the geometric image centre.
struct DistortionParams {
  double k1 = 0.0;
  double k2 = 0.0;
  std::optional<double> cx;
  std::optional<double> cy;
};

/// Fixed pot layout of a tray. Cell ids are row-major; an empty `active`
/// list means every cell holds a plant.
struct GridSpec {
  int rows = 1;
  int cols = 1;
  int origin_x = 0;
  int origin_y = 0;
  int stride_x = 0;
  int stride_y = 0;
  std::vector<int> active;

  std::vector<int> active_cells() const;
};

struct GridCell {
  int id = 0;
  RgbImage image;
};

/// BT.601 luma scaled to [0, 1].
GrayImage to_grayscale(const RgbImage& img);

RgbImage undistort(const RgbImage& img, const DistortionParams& params);

std::vector<GridCell> split_grid(const RgbImage& img, const GridSpec& grid);

RgbImage crop(const RgbImage& img, int x, int y, int width, int height);

template <typename T>
Plane<T> crop(const Plane<T>& plane, int x, int y, int width, int height) {
  return plane.block(y, x, height, width);
}

}  // namespace leafseg
