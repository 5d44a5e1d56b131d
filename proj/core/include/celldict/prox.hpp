#pragma once

#include "celldict/image.hpp"

namespace celldict {

/// Radius of the per-pixel Euclidean ball used by the dual update; equals
/// the TV weight. Always strictly positive.
class BallRadius {
 public:
  explicit BallRadius(double radius);
  double value() const noexcept { return radius_; }

 private:
  double radius_;
};

/// Componentwise max(v, 0).
Image project_nonneg(const Image& img);
void project_nonneg_inplace(Image& img);

/// Scales each pixel 2-vector w to w / max(1, |w| / r). Zero vectors pass
/// through unchanged.
GradientField project_ball(const GradientField& field, BallRadius radius);
void project_ball_inplace(GradientField& field, BallRadius radius);

/// prox of tau * (1/2 |y - datum|^2 + indicator(y >= 0)) at w:
/// max((w + tau * datum) / (1 + tau), 0) per pixel.
Image prox_quadratic_nonneg(const Image& w, const Image& datum, double tau);

}  // namespace celldict
