#include "celldict/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace celldict {

namespace {

void require_dims(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) {
    throw std::invalid_argument("image dimensions must be >= 1, got " + std::to_string(height) +
                                "x" + std::to_string(width));
  }
}

}  // namespace

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width) {
  require_dims(height, width);
  values_.assign(height * width, fill);
}

Image::Image(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  require_dims(height, width);
  if (values_.size() != height * width) {
    throw std::invalid_argument("image value count " + std::to_string(values_.size()) +
                                " does not match " + std::to_string(height) + "x" +
                                std::to_string(width));
  }
}

GradientField::GradientField(std::size_t height, std::size_t width)
    : height_(height), width_(width), dx_(height * width, 0.0), dy_(height * width, 0.0) {
  require_dims(height, width);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double distance2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance2: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double dot(const GradientField& a, const GradientField& b) {
  return dot(a.dx_values(), b.dx_values()) + dot(a.dy_values(), b.dy_values());
}

double norm2(const GradientField& a) { return std::sqrt(dot(a, a)); }

double distance2(const GradientField& a, const GradientField& b) {
  const double x = distance2(a.dx_values(), b.dx_values());
  const double y = distance2(a.dy_values(), b.dy_values());
  return std::sqrt(x * x + y * y);
}

}  // namespace celldict
