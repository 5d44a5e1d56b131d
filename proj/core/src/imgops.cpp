#include "celldict/imgops.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace celldict {

GradientField gradient(const Image& img) {
  GradientField out(img.height(), img.width());
  gradient_into(img, out);
  return out;
}

void gradient_into(const Image& img, GradientField& out) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  if (!out.same_shape(img)) out = GradientField(h, w);
  if (h == 0 || w == 0) return;
  const double* in = img.values().data();
  double* gx = out.dx_values().data();
  double* gy = out.dy_values().data();
  for (std::size_t r = 0; r < h; ++r) {
    const double* row = in + r * w;
    double* ox = gx + r * w;
    double* oy = gy + r * w;
    for (std::size_t c = 0; c + 1 < w; ++c) ox[c] = row[c + 1] - row[c];
    ox[w - 1] = 0.0;
    if (r + 1 < h) {
      const double* below = row + w;
      for (std::size_t c = 0; c < w; ++c) oy[c] = below[c] - row[c];
    } else {
      std::fill(oy, oy + w, 0.0);
    }
  }
}

Image gradient_adjoint(const GradientField& field) {
  Image out(field.height(), field.width());
  gradient_adjoint_into(field, out);
  return out;
}

void gradient_adjoint_into(const GradientField& field, Image& out) {
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  if (out.height() != h || out.width() != w) out = Image(h, w);
  if (h == 0 || w == 0) return;
  // Components on the last column / last row never enter gradient(), so
  // they are ignored here as well.
  const double* fx = field.dx_values().data();
  const double* fy = field.dy_values().data();
  double* o = out.values().data();
  for (std::size_t r = 0; r < h; ++r) {
    const double* x = fx + r * w;
    const double* y = fy + r * w;
    const double* y_up = r > 0 ? y - w : nullptr;
    const bool has_down = r + 1 < h;
    double* row = o + r * w;
    if (w == 1) {
      row[0] = 0.0;
    } else {
      row[0] = -x[0];
      for (std::size_t c = 1; c + 1 < w; ++c) row[c] = -x[c] + x[c - 1];
      row[w - 1] = x[w - 2];
    }
    if (has_down) {
      for (std::size_t c = 0; c < w; ++c) row[c] -= y[c];
    }
    if (y_up != nullptr) {
      for (std::size_t c = 0; c < w; ++c) row[c] += y_up[c];
    }
  }
}

Image divergence(const GradientField& field) {
  Image out = gradient_adjoint(field);
  for (double& v : out.values()) v = -v;
  return out;
}

double tv_norm(const Image& img) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  double total = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double gx = (c + 1 < w) ? img(r, c + 1) - img(r, c) : 0.0;
      const double gy = (r + 1 < h) ? img(r + 1, c) - img(r, c) : 0.0;
      total += std::sqrt(gx * gx + gy * gy);
    }
  }
  return total;
}

double operator_norm_sq_estimate(std::size_t height, std::size_t width, std::size_t iterations) {
  if (iterations == 0) throw std::invalid_argument("operator_norm_sq_estimate: iterations must be >= 1");
  if (height == 0 || width == 0) throw std::invalid_argument("operator_norm_sq_estimate: empty grid");
  if (height * width == 1) return 0.0;

  Image x(height, width);
  std::mt19937_64 rng(0x5eed0f9a1ULL);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (double& v : x.values()) v = uni(rng);
  double nrm = norm2(x.values());
  for (double& v : x.values()) v /= nrm;

  GradientField g(height, width);
  Image ktk(height, width);
  double best = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    gradient_into(x, g);
    gradient_adjoint_into(g, ktk);
    // Rayleigh quotient of a unit vector; for a PSD operator the sequence is
    // nondecreasing along power iterates, the running max removes round-off
    // wobble.
    best = std::max(best, dot(x.values(), ktk.values()));
    nrm = norm2(ktk.values());
    if (nrm == 0.0) break;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = ktk[i] / nrm;
  }
  return best;
}

Image sobel_energy(const Image& img) {
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  auto px = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    r = std::clamp<std::ptrdiff_t>(r, 0, h - 1);
    c = std::clamp<std::ptrdiff_t>(c, 0, w - 1);
    return img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  Image out(img.height(), img.width());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const double gc = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
      const double gr = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = gr * gr + gc * gc;
    }
  }
  return out;
}

SummedAreaTable::SummedAreaTable(const Image& img)
    : rows_(img.height() + 1), cols_(img.width() + 1), table_(rows_ * cols_, 0.0) {
  for (std::size_t i = 1; i < rows_; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 1; j < cols_; ++j) {
      row_sum += img(i - 1, j - 1);
      table_[i * cols_ + j] = table_[(i - 1) * cols_ + j] + row_sum;
    }
  }
}

double SummedAreaTable::rect_sum(std::size_t row, std::size_t col, std::size_t height,
                                 std::size_t width) const {
  const std::size_t r1 = row + height;
  const std::size_t c1 = col + width;
  if (r1 >= rows_ || c1 >= cols_) throw std::out_of_range("rect_sum: rectangle exceeds image");
  return at(r1, c1) - at(row, c1) - at(r1, col) + at(row, col);
}

SummedAreaTable integral_image(const Image& img) { return SummedAreaTable(img); }

}  // namespace celldict
