#include "leafseg/edges.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "leafseg/error.hpp"

namespace leafseg {

void CannyParams::validate() const {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "canny sigma must be > 0");
  if (!(low >= 0.0 && low <= high && high <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "canny thresholds need 0 <= low <= high <= 1");
  }
}

Eigen::VectorXd gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::VectorXd k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) k(i + radius) = std::exp(-(i * i) / (2.0 * sigma * sigma));
  return k / k.sum();
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "blur sigma must be > 0");
  const Eigen::VectorXd k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());

  GrayImage tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k(i + radius) * img(y, std::clamp(x + i, 0, w - 1));
      tmp(y, x) = acc;
    }
  }
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += k(i + radius) * tmp(std::clamp(y + i, 0, h - 1), x);
      out(y, x) = std::clamp(acc, 0.0, 1.0);
    }
  }
  return out;
}

Gradients sobel_gradients(const GrayImage& img) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  if (w < 3 || h < 3) throw Error(ErrorCode::ImageTooSmall, "Sobel needs at least 3x3 pixels");
  const double norm = 1.0 / (4.0 * std::numbers::sqrt2);
  auto at = [&](int y, int x) { return img(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };

  Gradients g{Plane<double>(h, w), Plane<double>(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      g.magnitude(y, x) = std::min(1.0, std::sqrt(gx * gx + gy * gy) * norm);
      // +0.0 folds -0.0 so a leftward gradient reports pi, never -pi.
      g.orientation(y, x) = std::atan2(gy + 0.0, gx);
    }
  }
  return g;
}

Plane<bool> non_maximum_suppression(const Gradients& g) {
  const int h = static_cast<int>(g.magnitude.rows());
  const int w = static_cast<int>(g.magnitude.cols());
  Plane<bool> keep = Plane<bool>::Constant(h, w, false);
  auto mag = [&](int y, int x) {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : g.magnitude(y, x);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = g.magnitude(y, x);
      if (m <= 0.0) continue;
      // Fold to [0, pi) and quantise to 0, 45, 90, 135 degrees.
      double angle = g.orientation(y, x);
      if (angle < 0) angle += std::numbers::pi;
      const int sector = static_cast<int>(std::floor(angle / (std::numbers::pi / 4.0) + 0.5)) % 4;
      int dx = 1, dy = 0;
      switch (sector) {
        case 0: dx = 1, dy = 0; break;
        case 1: dx = 1, dy = 1; break;
        case 2: dx = 0, dy = 1; break;
        default: dx = -1, dy = 1; break;
      }
      const double ahead = mag(y + dy, x + dx);
      const double behind = mag(y - dy, x - dx);
      keep(y, x) = m >= ahead && m > behind;
    }
  }
  return keep;
}

Plane<bool> hysteresis(const Plane<bool>& ridges, const Plane<double>& magnitude, double low, double high) {
  const int h = static_cast<int>(ridges.rows());
  const int w = static_cast<int>(ridges.cols());
  Plane<bool> out = Plane<bool>::Constant(h, w, false);
  std::vector<PixelCoord> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (ridges(y, x) && magnitude(y, x) >= high && !out(y, x)) {
        out(y, x) = true;
        stack.push_back({x, y});
      }
    }
  }
  while (!stack.empty()) {
    const PixelCoord p = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = p.x + dx;
        const int ny = p.y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || out(ny, nx)) continue;
        if (ridges(ny, nx) && magnitude(ny, nx) >= low) {
          out(ny, nx) = true;
          stack.push_back({nx, ny});
        }
      }
    }
  }
  return out;
}

EdgeMap canny(const GrayImage& img, const CannyParams& params) {
  params.validate();
  if (img.rows() < 3 || img.cols() < 3) throw Error(ErrorCode::ImageTooSmall, "Canny needs at least 3x3 pixels");
  Gradients g = sobel_gradients(gaussian_blur(img, params.sigma));
  const Plane<bool> ridges = non_maximum_suppression(g);
  return EdgeMap{hysteresis(ridges, g.magnitude, params.low, params.high), std::move(g.orientation)};
}

}  // namespace leafseg
