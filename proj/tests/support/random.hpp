#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <random>

#include "celldict/image.hpp"

namespace testutil {

using Rng = std::mt19937_64;

celldict::Image random_image(std::size_t h, std::size_t w, Rng& rng, double lo = 0.0, double hi = 1.0);
celldict::GradientField random_field(std::size_t h, std::size_t w, Rng& rng, double scale = 1.0);

/// Sum of a few random low-frequency cosines, shifted to be positive.
celldict::Image smooth_image(std::size_t h, std::size_t w, Rng& rng);

/// Orthonormal n x k matrix from the QR factor of a Gaussian matrix.
Eigen::MatrixXd random_orthonormal(std::size_t n, std::size_t k, Rng& rng);

Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng);

}  // namespace testutil
