#include "leafseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "leafseg/error.hpp"

namespace leafseg {

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error(ErrorCode::InvalidArgument, "negative image size");
  pixels_ = Buffer::Zero(static_cast<Eigen::Index>(width) * height, 3);
}

RgbImage::RgbImage(int width, int height, Buffer pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.rows() != static_cast<Eigen::Index>(width) * height) {
    throw Error(ErrorCode::DimensionMismatch, "pixel buffer does not match width x height");
  }
}

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.height(), img.width());
  const auto& px = img.pixels();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const Eigen::Index i = static_cast<Eigen::Index>(y) * img.width() + x;
      const double luma = 0.299 * px(i, 0) + 0.587 * px(i, 1) + 0.114 * px(i, 2);
      out(y, x) = std::clamp(luma / 255.0, 0.0, 1.0);
    }
  }
  return out;
}

namespace {

// Bilinear sample at (sx, sy); false when the point lies outside the image.
bool sample_bilinear(const RgbImage& img, double sx, double sy, std::uint8_t out[3]) {
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  if (!(sx >= 0.0 && sy >= 0.0 && sx <= max_x && sy <= max_y)) return false;
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = sx - x0;
  const double fy = sy - y0;
  for (int c = 0; c < 3; ++c) {
    const double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
    const double bottom = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
    const double v = (1.0 - fy) * top + fy * bottom;
    out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return true;
}

}  // namespace

RgbImage undistort(const RgbImage& img, const DistortionParams& params) {
  if (img.empty()) return img;
  const double cx = params.cx.value_or((img.width() - 1) / 2.0);
  const double cy = params.cy.value_or((img.height() - 1) / 2.0);
  if (params.k1 == 0.0 && params.k2 == 0.0) return img;

  const double half_diag = 0.5 * std::hypot(static_cast<double>(img.width()), static_cast<double>(img.height()));
  RgbImage out(img.width(), img.height());
  std::uint8_t rgb[3];
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double r2 = (dx * dx + dy * dy) / (half_diag * half_diag);
      const double scale = 1.0 + params.k1 * r2 + params.k2 * r2 * r2;
      if (sample_bilinear(img, cx + dx * scale, cy + dy * scale, rgb)) {
        out.set(x, y, rgb[0], rgb[1], rgb[2]);
      }
    }
  }
  return out;
}

std::vector<int> GridSpec::active_cells() const {
  if (!active.empty()) return active;
  std::vector<int> all(static_cast<std::size_t>(std::max(rows * cols, 0)));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

RgbImage crop(const RgbImage& img, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || width < 0 || height < 0 || x + width > img.width() || y + height > img.height()) {
    throw Error(ErrorCode::OutOfBounds, "crop window outside image");
  }
  RgbImage out(width, height);
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) out.pixel(col, row) = img.pixel(x + col, y + row);
  }
  return out;
}

std::vector<GridCell> split_grid(const RgbImage& img, const GridSpec& grid) {
  if (grid.rows < 1 || grid.cols < 1 || grid.stride_x < 1 || grid.stride_y < 1) {
    throw Error(ErrorCode::GridOutOfBounds, "grid needs rows, cols and strides >= 1");
  }
  std::vector<int> cells = grid.active_cells();
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  std::vector<GridCell> out;
  out.reserve(cells.size());
  for (const int id : cells) {
    if (id < 0 || id >= grid.rows * grid.cols) {
      throw Error(ErrorCode::GridOutOfBounds, "active cell " + std::to_string(id) + " not in grid");
    }
    const int x = grid.origin_x + (id % grid.cols) * grid.stride_x;
    const int y = grid.origin_y + (id / grid.cols) * grid.stride_y;
    if (x < 0 || y < 0 || x + grid.stride_x > img.width() || y + grid.stride_y > img.height()) {
      throw Error(ErrorCode::GridOutOfBounds, "cell " + std::to_string(id) + " extends past the image");
    }
    out.push_back({id, crop(img, x, y, grid.stride_x, grid.stride_y)});
  }
  return out;
}

}  // namespace leafseg
