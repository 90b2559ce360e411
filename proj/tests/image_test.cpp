#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "leafseg/error.hpp"
#include "leafseg/image.hpp"
#include "test_support.hpp"

namespace leafseg {
namespace {

using testing::random_image;
using testing::uniform_image;

TEST(Grayscale, WhiteBlackAndRed) {
  EXPECT_DOUBLE_EQ(to_grayscale(uniform_image(1, 1, 255, 255, 255))(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(to_grayscale(uniform_image(1, 1, 0, 0, 0))(0, 0), 0.0);
  EXPECT_NEAR(to_grayscale(uniform_image(1, 1, 255, 0, 0))(0, 0), 0.299, 1e-12);
}

TEST(Grayscale, AlwaysInUnitRange) {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    const GrayImage g = to_grayscale(random_image(rng, 7, 5));
    EXPECT_GE(g.minCoeff(), 0.0);
    EXPECT_LE(g.maxCoeff(), 1.0);
  }
}

TEST(Undistort, ZeroCoefficientsIsIdentity) {
  Rng rng(3);
  const RgbImage img = random_image(rng, 31, 17);
  EXPECT_EQ(undistort(img, {}), img);
}

TEST(Undistort, CentrePixelIsFixed) {
  RgbImage img(21, 21);
  img.set(10, 10, 250, 240, 230);
  for (const double k1 : {-0.3, 0.1, 0.5}) {
    const RgbImage out = undistort(img, {k1, 0.0, std::nullopt, std::nullopt});
    EXPECT_EQ(out.at(10, 10, 0), 250);
    EXPECT_EQ(out.at(10, 10, 1), 240);
    EXPECT_EQ(out.at(10, 10, 2), 230);
  }
}

// Checkerboard seen through a radial lens: an output point p of the corrected
// image samples the captured image at p * (1 + k1 r^2), so the captured image
// at q shows the board at the p solving that relation.
RgbImage distorted_checkerboard(int side, int cell, double k1) {
  const double c = (side - 1) / 2.0;
  const double half_diag = 0.5 * std::hypot(side, side);
  RgbImage img(side, side);
  constexpr int kSuper = 4;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      int white = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double qx = x - 0.5 + (sx + 0.5) / kSuper - c;
          const double qy = y - 0.5 + (sy + 0.5) / kSuper - c;
          const double rq = std::hypot(qx, qy) / half_diag;
          double rp = rq;
          for (int it = 0; it < 30; ++it) rp -= (rp * (1 + k1 * rp * rp) - rq) / (1 + 3 * k1 * rp * rp);
          const double s = rq > 0 ? rp / rq : 1.0;
          const double px = qx * s + c + 0.5;
          const double py = qy * s + c + 0.5;
          const int parity = (static_cast<int>(std::floor(px / cell)) + static_cast<int>(std::floor(py / cell))) & 1;
          white += parity;
        }
      }
      const auto v = static_cast<std::uint8_t>(std::lround(255.0 * white / (kSuper * kSuper)));
      img.set(x, y, v, v, v);
    }
  }
  return img;
}

// Follows one vertical board line from the centre row outwards, locating the
// sub-pixel intensity crossing in every row, and returns the RMS residual of
// a least-squares straight-line fit x = a + b*y.
double vertical_line_residual(const RgbImage& img, double start_x, int y0, int y1) {
  const GrayImage g = to_grayscale(img);
  auto crossing_near = [&](int y, double guess) -> std::optional<double> {
    std::optional<double> best;
    for (int x = std::max(0, static_cast<int>(guess) - 4); x < std::min(img.width() - 1, static_cast<int>(guess) + 5); ++x) {
      const double a = g(y, x) - 0.5;
      const double b = g(y, x + 1) - 0.5;
      if ((a < 0) == (b < 0) || a == b) continue;
      const double pos = x + a / (a - b);
      if (!best || std::abs(pos - guess) < std::abs(*best - guess)) best = pos;
    }
    return best;
  };
  std::vector<double> ys, xs;
  const int mid = (y0 + y1) / 2;
  for (const int dir : {-1, 1}) {
    double guess = start_x;
    for (int y = mid; y >= y0 && y <= y1; y += dir) {
      const auto pos = crossing_near(y, guess);
      if (!pos) continue;
      guess = *pos;
      if (dir == 1 && y == mid) continue;
      ys.push_back(y);
      xs.push_back(*pos);
    }
  }
  const double n = static_cast<double>(ys.size());
  double sy = 0, sx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    sy += ys[i];
    sx += xs[i];
    syy += ys[i] * ys[i];
    sxy += ys[i] * xs[i];
  }
  const double b = (n * sxy - sy * sx) / (n * syy - sy * sy);
  const double a = (sx - b * sy) / n;
  double ss = 0;
  for (std::size_t i = 0; i < ys.size(); ++i) ss += std::pow(xs[i] - (a + b * ys[i]), 2);
  return std::sqrt(ss / n);
}

TEST(Undistort, StraightensCheckerboardLines) {
  constexpr int kSide = 161;
  constexpr int kCell = 20;
  constexpr double kK1 = 0.1;
  const RgbImage captured = distorted_checkerboard(kSide, kCell, kK1);
  const RgbImage corrected = undistort(captured, {kK1, 0.0, std::nullopt, std::nullopt});
  double before = 0, after = 0;
  for (const int line : {20, 40, 120, 140}) {
    before += vertical_line_residual(captured, line, 25, 135);
    after += vertical_line_residual(corrected, line, 25, 135);
  }
  EXPECT_GT(before, 0.1);
  EXPECT_LE(after, 0.5 * before) << "before " << before << " after " << after;
}

TEST(SplitGrid, TwoByTwoTiles) {
  Rng rng(5);
  const RgbImage img = random_image(rng, 100, 100);
  GridSpec grid;
  grid.rows = 2;
  grid.cols = 2;
  grid.stride_x = 50;
  grid.stride_y = 50;
  const auto cells = split_grid(img, grid);
  ASSERT_EQ(cells.size(), 4u);
  for (int id = 0; id < 4; ++id) {
    EXPECT_EQ(cells[id].id, id);
    EXPECT_EQ(cells[id].image.width(), 50);
    EXPECT_EQ(cells[id].image.height(), 50);
    const int ox = (id % 2) * 50;
    const int oy = (id / 2) * 50;
    for (int y = 0; y < 50; ++y) {
      for (int x = 0; x < 50; ++x) {
        for (int c = 0; c < 3; ++c) ASSERT_EQ(cells[id].image.at(x, y, c), img.at(ox + x, oy + y, c));
      }
    }
  }
}

TEST(SplitGrid, SingleActiveCell) {
  const RgbImage img = uniform_image(100, 100, 1, 2, 3);
  GridSpec grid;
  grid.rows = 2;
  grid.cols = 2;
  grid.stride_x = 50;
  grid.stride_y = 50;
  grid.active = {3};
  const auto cells = split_grid(img, grid);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].id, 3);
}

TEST(SplitGrid, StrideBeyondImageFails) {
  const RgbImage img = uniform_image(100, 100, 0, 0, 0);
  GridSpec grid;
  grid.rows = 2;
  grid.cols = 2;
  grid.stride_x = 120;
  grid.stride_y = 50;
  try {
    split_grid(img, grid);
    FAIL() << "expected GridOutOfBounds";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridOutOfBounds);
  }
}

TEST(SplitGrid, TilesCoverImageWithoutOverlap) {
  Rng rng(8);
  const RgbImage img = random_image(rng, 60, 40);
  GridSpec grid;
  grid.rows = 2;
  grid.cols = 3;
  grid.stride_x = 20;
  grid.stride_y = 20;
  Plane<int> hits = Plane<int>::Zero(40, 60);
  for (const auto& cell : split_grid(img, grid)) {
    const int ox = (cell.id % 3) * 20;
    const int oy = (cell.id / 3) * 20;
    hits.block(oy, ox, cell.image.height(), cell.image.width()) += 1;
  }
  EXPECT_EQ(hits.minCoeff(), 1);
  EXPECT_EQ(hits.maxCoeff(), 1);
}

TEST(Crop, OutsideWindowFails) {
  const RgbImage img = uniform_image(10, 10, 0, 0, 0);
  EXPECT_THROW(crop(img, 5, 5, 6, 2), Error);
  EXPECT_EQ(crop(img, 5, 5, 5, 5).width(), 5);
}

}  // namespace
}  // namespace leafseg
