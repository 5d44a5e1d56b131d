#pragma once

#include <cstddef>
#include <vector>

#include "celldict/image.hpp"

namespace celldict {

// Discrete operators on 2-D grids.
//
// The gradient uses forward differences with a Neumann boundary: the
// horizontal component is zero on the last column and the vertical component
// is zero on the last row. gradient_adjoint() is the exact transpose of that
// stencil, so <gradient(y), q> == <y, gradient_adjoint(q)> up to round-off.

GradientField gradient(const Image& img);
void gradient_into(const Image& img, GradientField& out);

/// Transpose of gradient(), i.e. the negative discrete divergence.
Image gradient_adjoint(const GradientField& field);
void gradient_adjoint_into(const GradientField& field, Image& out);

/// Discrete divergence, defined as -gradient_adjoint(field).
Image divergence(const GradientField& field);

/// Isotropic total variation: sum over pixels of |(dx, dy)|.
double tv_norm(const Image& img);

/// Power-iteration estimate of the largest eigenvalue of the
/// gradient-adjoint-times-gradient operator on a height x width grid.
/// Nondecreasing in `iterations`, never above 8. A 1x1 grid yields 0.
double operator_norm_sq_estimate(std::size_t height, std::size_t width, std::size_t iterations);

/// Squared Sobel magnitude E = Gr^2 + Gc^2 with replicate padding at the
/// border.
Image sobel_energy(const Image& img);

/// Summed-area table of size (h+1) x (w+1) with a zero first row and column.
class SummedAreaTable {
 public:
  explicit SummedAreaTable(const Image& img);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  /// S(i, j): sum of img(r, c) over r < i, c < j.
  double at(std::size_t i, std::size_t j) const { return table_[i * cols_ + j]; }

  /// Sum over the rectangle [row, row + height) x [col, col + width).
  double rect_sum(std::size_t row, std::size_t col, std::size_t height, std::size_t width) const;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> table_;
};

SummedAreaTable integral_image(const Image& img);

}  // namespace celldict
