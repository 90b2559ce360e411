#pragma once

#include "leafseg/image.hpp"

namespace leafseg {

struct CannyParams {
  double sigma = 1.4;
  double low = 0.04;   // hysteresis thresholds on magnitude normalised to [0, 1]
  double high = 0.10;

  void validate() const;
};

struct Gradients {
  Plane<double> magnitude;    // [0, 1]
  Plane<double> orientation;  // atan2(gy, gx) in (-pi, pi]
};

struct EdgeMap {
  Plane<bool> mask;
  /// Gradient direction (normal to the edge); meaningful only where mask is set.
  Plane<double> orientation;

  int width() const noexcept { return static_cast<int>(mask.cols()); }
  int height() const noexcept { return static_cast<int>(mask.rows()); }
  Eigen::Index count() const { return mask.count(); }
};

/// Normalised 1-D Gaussian with radius ceil(3 sigma).
Eigen::VectorXd gaussian_kernel(double sigma);

/// Separable blur with edge replication.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

/// 3x3 Sobel with edge replication; magnitude scaled by 1 / (4 sqrt 2).
Gradients sobel_gradients(const GrayImage& img);

/// Thin ridges along the quantised gradient direction. Ties along a ridge are
/// kept on the negative side only, so a symmetric step yields a 1-pixel line.
Plane<bool> non_maximum_suppression(const Gradients& g);

/// Keeps weak (>= low) ridge pixels 8-connected to a strong (>= high) one.
Plane<bool> hysteresis(const Plane<bool>& ridges, const Plane<double>& magnitude, double low, double high);

EdgeMap canny(const GrayImage& img, const CannyParams& params = {});

}  // namespace leafseg
