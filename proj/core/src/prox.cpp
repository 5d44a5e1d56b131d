#include "celldict/prox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace celldict {

BallRadius::BallRadius(double radius) : radius_(radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("ball radius must be positive and finite, got " +
                                std::to_string(radius));
  }
}

Image project_nonneg(const Image& img) {
  Image out = img;
  project_nonneg_inplace(out);
  return out;
}

void project_nonneg_inplace(Image& img) {
  for (double& v : img.values()) v = std::max(v, 0.0);
}

GradientField project_ball(const GradientField& field, BallRadius radius) {
  GradientField out = field;
  project_ball_inplace(out, radius);
  return out;
}

void project_ball_inplace(GradientField& field, BallRadius radius) {
  const double r = radius.value();
  auto dx = field.dx_values();
  auto dy = field.dy_values();
  for (std::size_t i = 0; i < dx.size(); ++i) {
    // Branch-free: a zero vector gets scale 1 and stays zero.
    const double n = std::sqrt(dx[i] * dx[i] + dy[i] * dy[i]);
    const double scale = std::max(1.0, n / r);
    dx[i] /= scale;
    dy[i] /= scale;
  }
}

Image prox_quadratic_nonneg(const Image& w, const Image& datum, double tau) {
  if (!w.same_shape(datum)) throw std::invalid_argument("prox_quadratic_nonneg: shape mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("prox_quadratic_nonneg: tau must be > 0");
  Image out(w.height(), w.width());
  const double denom = 1.0 + tau;
  for (std::size_t i = 0; i < w.size(); ++i) {
    out[i] = std::max((w[i] + tau * datum[i]) / denom, 0.0);
  }
  return out;
}

}  // namespace celldict
