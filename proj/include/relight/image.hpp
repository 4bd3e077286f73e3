#pragma once

#include "relight/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <type_traits>
#include <vector>

namespace relight {

/// Row-major image, row 0 at the top.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <typename U>
  bool same_shape(const Image<U>& o) const {
    return same_shape(o.width(), o.height());
  }

  T& operator()(int x, int y) { return pixels_[index(x, y)]; }
  const T& operator()(int x, int y) const { return pixels_[index(x, y)]; }
  T& operator[](std::size_t i) { return pixels_[i]; }
  const T& operator[](std::size_t i) const { return pixels_[i]; }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  std::vector<T>& data() { return pixels_; }
  const std::vector<T>& data() const { return pixels_; }

  bool operator==(const Image& o) const
    requires(!std::is_same_v<T, Rgb>)
  {
    return width_ == o.width_ && height_ == o.height_ && pixels_ == o.pixels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> pixels_;
};

using RgbImage = Image<Rgb>;
using FloatImage = Image<float>;
using MaskImage = Image<std::uint8_t>;

/// Bit-exact equality for RGB images (Eigen arrays lack operator== returning bool).
bool identical(const RgbImage& a, const RgbImage& b);

/// Bilinear taps for continuous pixel coordinates where pixel (x, y) has its
/// center at (x + 0.5, y + 0.5). Coordinates are clamped to the image.
struct BilinearTaps {
  int x0, y0, x1, y1;
  float wx, wy;
};

inline BilinearTaps bilinear_taps(int width, int height, const Vec2& p) {
  const double fx = std::clamp(p.x() - 0.5, 0.0, static_cast<double>(width - 1));
  const double fy = std::clamp(p.y() - 0.5, 0.0, static_cast<double>(height - 1));
  BilinearTaps t;
  t.x0 = static_cast<int>(std::floor(fx));
  t.y0 = static_cast<int>(std::floor(fy));
  t.x1 = std::min(t.x0 + 1, width - 1);
  t.y1 = std::min(t.y0 + 1, height - 1);
  t.wx = static_cast<float>(fx - t.x0);
  t.wy = static_cast<float>(fy - t.y0);
  return t;
}

template <typename T>
T sample_bilinear(const Image<T>& img, const Vec2& p) {
  const BilinearTaps t = bilinear_taps(img.width(), img.height(), p);
  const T top = img(t.x0, t.y0) * (1.0f - t.wx) + img(t.x1, t.y0) * t.wx;
  const T bottom = img(t.x0, t.y1) * (1.0f - t.wx) + img(t.x1, t.y1) * t.wx;
  return top * (1.0f - t.wy) + bottom * t.wy;
}

/// Pixel containing continuous coordinate p, or false when outside.
inline bool nearest_pixel(int width, int height, const Vec2& p, int& x, int& y) {
  if (!(p.x() >= 0.0 && p.y() >= 0.0 && p.x() < width && p.y() < height)) return false;
  x = static_cast<int>(p.x());
  y = static_cast<int>(p.y());
  return true;
}

}  // namespace relight
