#include "celldict/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>

#include "celldict/errors.hpp"
#include "celldict/image.hpp"
#include "celldict/parallel.hpp"

namespace celldict {

void SynthConfig::validate() const {
  if (n_cells == 0) throw ConfigError("synth: n_cells must be >= 1");
  if (channels == 0) throw ConfigError("synth: channels must be >= 1");
  if (height == 0 || width == 0) throw ConfigError("synth: image shape must be positive");
  if (k_true == 0 || k_true > height * width) {
    throw ConfigError("synth: k_true must lie in [1, height*width]");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("synth: noise must be >= 0");
  if (classes == 0) throw ConfigError("synth: classes must be >= 1");
  if (frame != 0 && (frame < 48 || frame < height || frame < width)) {
    throw ConfigError("synth: frame must be >= 48 and cover the cell shape");
  }
}

std::vector<ChannelId> default_channels(std::size_t count) {
  static const char* const kNames[] = {"DPC_Left", "DPC_Right", "DPC_Top", "DPC_Bottom",
                                       "Brightfield"};
  std::vector<ChannelId> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name = kNames[i % 5];
    if (i >= 5) name += "_" + std::to_string(i / 5);
    out.push_back({i, name});
  }
  return out;
}

namespace {

using Pattern = std::function<double(double, double)>;  // (u = column, v = row) in [0, 1]

Pattern make_pattern(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };
  const double cu = in(0.25, 0.75);
  const double cv = in(0.25, 0.75);
  switch (k % 3) {
    case 0: {
      const double s = in(0.12, 0.25);
      return [=](double u, double v) {
        return std::exp(-((u - cu) * (u - cu) + (v - cv) * (v - cv)) / (2.0 * s * s));
      };
    }
    case 1: {
      const double radius = in(0.2, 0.35);
      const double width = in(0.08, 0.12);
      return [=](double u, double v) {
        const double r = std::hypot(u - cu, v - cv);
        const double z = (r - radius) / width;
        return std::exp(-0.5 * z * z);
      };
    }
    default: {
      const double angle = in(0.0, std::numbers::pi);
      const double offset = in(-0.2, 0.2);
      const double s = in(0.1, 0.2);
      const double ca = std::cos(angle);
      const double sa = std::sin(angle);
      return [=](double u, double v) {
        const double d = (u - 0.5) * ca + (v - 0.5) * sa - offset;
        return std::exp(-0.5 * (d / s) * (d / s));
      };
    }
  }
}

enum class Kind { kDx, kDy, kPlain };

struct ChannelRender {
  Kind kind;
  double sign;
};

ChannelRender channel_render(std::size_t c) {
  switch (c % 5) {
    case 0: return {Kind::kDx, 1.0};
    case 1: return {Kind::kDx, -1.0};
    case 2: return {Kind::kDy, 1.0};
    case 3: return {Kind::kDy, -1.0};
    default: return {Kind::kPlain, 1.0};
  }
}

// Channel template of one pattern as an n-vector (row-major pixels).
Eigen::VectorXd render(const Pattern& p, ChannelRender how, std::size_t h, std::size_t w) {
  constexpr double kStep = 1e-5;
  Eigen::VectorXd out(static_cast<Eigen::Index>(h * w));
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double u = (static_cast<double>(c) + 0.5) / static_cast<double>(w);
      const double v = (static_cast<double>(r) + 0.5) / static_cast<double>(h);
      double value = 0.0;
      switch (how.kind) {
        case Kind::kPlain:
          value = p(u, v);
          break;
        case Kind::kDx:  // derivative per pixel step
          value = (p(u + kStep, v) - p(u - kStep, v)) / (2.0 * kStep * static_cast<double>(w));
          break;
        case Kind::kDy:
          value = (p(u, v + kStep) - p(u, v - kStep)) / (2.0 * kStep * static_cast<double>(h));
          break;
      }
      out(static_cast<Eigen::Index>(r * w + c)) = value;
    }
  }
  if (how.kind != Kind::kPlain) {
    // Offset by the largest slope so both signs of the pair stay non-negative.
    const double offset = out.cwiseAbs().maxCoeff();
    out = (how.sign * out).array() + offset;
  }
  return out;
}

Image to_image(const Eigen::VectorXd& v, std::size_t h, std::size_t w) {
  return Image(h, w, std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

SynthDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t h = cfg.height;
  const std::size_t w = cfg.width;
  const std::size_t n = h * w;

  SynthDataset ds;
  ds.channels = default_channels(cfg.channels);

  std::mt19937_64 pattern_rng(substream_seed(cfg.seed, 0));
  std::vector<Pattern> patterns;
  for (std::size_t k = 0; k < cfg.k_true; ++k) patterns.push_back(make_pattern(k, pattern_rng));

  for (std::size_t c = 0; c < cfg.channels; ++c) {
    Eigen::MatrixXd t(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.k_true));
    for (std::size_t k = 0; k < cfg.k_true; ++k) {
      t.col(static_cast<Eigen::Index>(k)) = render(patterns[k], channel_render(c), h, w);
    }
    ds.templates.push_back(std::move(t));
  }

  for (std::size_t j = 0; j < cfg.n_cells; ++j) {
    std::mt19937_64 rng(substream_seed(cfg.seed, j + 1));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int label = static_cast<int>(j % cfg.classes);
    Eigen::VectorXd coef(static_cast<Eigen::Index>(cfg.k_true));
    for (std::size_t k = 0; k < cfg.k_true; ++k) {
      const bool favored = k % cfg.classes == static_cast<std::size_t>(label);
      coef(static_cast<Eigen::Index>(k)) = (0.2 + 0.8 * uni(rng)) * (favored ? 1.0 : 0.35);
    }
    coef /= coef.sum();

    CellRecord clean{"cell_" + std::to_string(j), {}};
    CellRecord noisy{clean.cell_id, {}};
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      const Eigen::VectorXd x = ds.templates[c] * coef;
      Eigen::VectorXd e(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = gauss(rng);
      Eigen::VectorXd xn = x;
      if (cfg.noise > 0.0) {
        xn += cfg.noise * e / e.norm();
        xn = xn.cwiseMax(0.0);
      }
      clean.channels.push_back(to_image(x, h, w));
      noisy.channels.push_back(to_image(xn, h, w));
    }

    if (cfg.frame != 0) {
      std::uniform_int_distribution<std::size_t> oy(0, cfg.frame - h);
      std::uniform_int_distribution<std::size_t> ox(0, cfg.frame - w);
      const std::size_t y0 = oy(rng);
      const std::size_t x0 = ox(rng);
      CellRecord raw{clean.cell_id, {}};
      for (const Image& img : noisy.channels) {
        double mean = 0.0;
        for (double v : img.values()) mean += v;
        mean /= static_cast<double>(img.size());
        Image frame(cfg.frame, cfg.frame, mean);
        for (std::size_t r = 0; r < h; ++r) {
          for (std::size_t c = 0; c < w; ++c) frame(y0 + r, x0 + c) = img(r, c);
        }
        raw.channels.push_back(std::move(frame));
      }
      ds.raw_frames.push_back(std::move(raw));
    }

    ds.cells.push_back(std::move(noisy));
    ds.truth.push_back(std::move(clean));
    ds.labels.push_back(label);
  }
  return ds;
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  const double cutoff = s.size() > 0 ? s(0) * 1e-10 : 0.0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

Eigen::VectorXd principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("principal_angles: row mismatch");
  const Eigen::MatrixXd& wide = a.cols() >= b.cols() ? a : b;
  const Eigen::MatrixXd& narrow = a.cols() >= b.cols() ? b : a;
  // Sines of the angles are the singular values of the part of `narrow`
  // outside span(wide); this stays accurate for tiny angles.
  const Eigen::MatrixXd residual = narrow - wide * (wide.transpose() * narrow);
  Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues();
  std::sort(s.begin(), s.end());
  for (auto& v : s) v = std::asin(std::min(1.0, v));
  return s;
}

}  // namespace celldict
