#pragma once

#include <cstddef>

#include "celldict/image.hpp"

namespace celldict {

/// Top-left corner and score of the selected focus window.
struct FocusResult {
  std::size_t y_star = 0;
  std::size_t x_star = 0;
  std::size_t window = 0;
  double score = 0.0;  // mean Sobel energy inside the window
};

/// w = max(48, min(floor(0.75 * min(H, W)), min(H, W))).
std::size_t window_size(std::size_t height, std::size_t width);

/// Scan stride floor(w / 8), at least 1.
std::size_t window_stride(std::size_t window);

/// Sliding-window argmax of the mean Sobel energy, evaluated through a
/// summed-area table on the stride grid plus the bottom/right flush
/// positions. Ties keep the first position in row-major scan order.
/// Throws DataError if the frame is smaller than the window.
FocusResult focus_select(const Image& frame);
FocusResult focus_select(const Image& frame, std::size_t window);

Image crop(const Image& img, std::size_t row, std::size_t col, std::size_t height, std::size_t width);

/// Central size x size crop (offsets rounded down).
Image center_crop(const Image& img, std::size_t size);

struct NormalizedImage {
  Image image;
  double min = 0.0;
  double max = 0.0;
};

/// (v - min) / (max - min); a constant image maps to all zeros.
NormalizedImage normalize_minmax(const Image& img);

}  // namespace celldict
