#include "celldict/preprocess.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "celldict/errors.hpp"
#include "celldict/imgops.hpp"

namespace celldict {

std::size_t window_size(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw std::invalid_argument("window_size: empty frame");
  const std::size_t m = std::min(height, width);
  const std::size_t three_quarters = (3 * m) / 4;  // floor(0.75 m) in integers
  return std::max<std::size_t>(48, std::min(three_quarters, m));
}

std::size_t window_stride(std::size_t window) { return std::max<std::size_t>(1, window / 8); }

namespace {

std::vector<std::size_t> scan_positions(std::size_t extent, std::size_t window, std::size_t stride) {
  const std::size_t last = extent - window;
  std::vector<std::size_t> pos;
  for (std::size_t p = 0; p <= last; p += stride) pos.push_back(p);
  if (pos.back() != last) pos.push_back(last);
  return pos;
}

}  // namespace

FocusResult focus_select(const Image& frame) {
  return focus_select(frame, window_size(frame.height(), frame.width()));
}

FocusResult focus_select(const Image& frame, std::size_t window) {
  if (window == 0) throw std::invalid_argument("focus_select: window must be >= 1");
  if (frame.height() < window || frame.width() < window) {
    throw DataError("focus_select: frame " + std::to_string(frame.height()) + "x" +
                    std::to_string(frame.width()) + " is smaller than the window " +
                    std::to_string(window));
  }
  const SummedAreaTable table(sobel_energy(frame));
  const std::size_t stride = window_stride(window);
  const double area = static_cast<double>(window) * static_cast<double>(window);

  FocusResult best;
  best.window = window;
  bool first = true;
  for (std::size_t y : scan_positions(frame.height(), window, stride)) {
    for (std::size_t x : scan_positions(frame.width(), window, stride)) {
      const double score = table.rect_sum(y, x, window, window) / area;
      if (first || score > best.score) {
        best.y_star = y;
        best.x_star = x;
        best.score = score;
        first = false;
      }
    }
  }
  // Differences of partial sums can leave a tiny negative on flat frames.
  best.score = std::max(best.score, 0.0);
  return best;
}

Image crop(const Image& img, std::size_t row, std::size_t col, std::size_t height,
           std::size_t width) {
  if (row + height > img.height() || col + width > img.width()) {
    throw std::out_of_range("crop: window exceeds image");
  }
  Image out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) out(r, c) = img(row + r, col + c);
  }
  return out;
}

Image center_crop(const Image& img, std::size_t size) {
  if (size > img.height() || size > img.width()) {
    throw std::out_of_range("center_crop: size exceeds image");
  }
  return crop(img, (img.height() - size) / 2, (img.width() - size) / 2, size, size);
}

NormalizedImage normalize_minmax(const Image& img) {
  const auto [lo_it, hi_it] = std::minmax_element(img.values().begin(), img.values().end());
  NormalizedImage out{Image(img.height(), img.width()), *lo_it, *hi_it};
  const double range = out.max - out.min;
  if (range > 0.0) {
    for (std::size_t i = 0; i < img.size(); ++i) {
      out.image[i] = std::clamp((img[i] - out.min) / range, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace celldict
