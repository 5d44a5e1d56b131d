#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace celldict {

/// Dense 2-D scalar image stored row-major.
///
/// A default-constructed Image is empty (0x0) and only useful as a
/// placeholder; every other constructor requires height, width >= 1.
class Image {
 public:
  Image() = default;
  Image(std::size_t height, std::size_t width, double fill = 0.0);
  Image(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * width_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * width_ + c]; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

/// Per-pixel 2-vector field (horizontal and vertical components).
class GradientField {
 public:
  GradientField() = default;
  GradientField(std::size_t height, std::size_t width);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return dx_.size(); }

  double& dx(std::size_t r, std::size_t c) { return dx_[r * width_ + c]; }
  double dx(std::size_t r, std::size_t c) const { return dx_[r * width_ + c]; }
  double& dy(std::size_t r, std::size_t c) { return dy_[r * width_ + c]; }
  double dy(std::size_t r, std::size_t c) const { return dy_[r * width_ + c]; }

  std::span<double> dx_values() noexcept { return dx_; }
  std::span<const double> dx_values() const noexcept { return dx_; }
  std::span<double> dy_values() noexcept { return dy_; }
  std::span<const double> dy_values() const noexcept { return dy_; }

  bool same_shape(const Image& img) const noexcept {
    return height_ == img.height() && width_ == img.width();
  }

  friend bool operator==(const GradientField&, const GradientField&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> dx_;
  std::vector<double> dy_;
};

// Reductions below accumulate in index order so results do not depend on
// the caller's threading.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double distance2(std::span<const double> a, std::span<const double> b);

double dot(const GradientField& a, const GradientField& b);
double norm2(const GradientField& a);
double distance2(const GradientField& a, const GradientField& b);

}  // namespace celldict
