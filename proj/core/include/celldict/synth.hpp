#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "celldict/image.hpp"
#include "celldict/multichannel.hpp"

namespace celldict {

// Synthetic multi-channel cells for desk-scale verification.
//
// Each cell mixes k_true smooth base patterns (blobs, rings, ridges) with
// non-negative coefficients. Channel c renders pattern k as a channel
// template: brightfield-like channels use the pattern itself, DPC-like
// channels use a positive offset plus a signed directional derivative, so a
// Left/Right (or Top/Bottom) pair sums to a constant image. Noise of l2 norm
// exactly delta is added per image and the result is clipped at zero, which
// keeps the perturbation at most delta.

struct SynthConfig {
  std::size_t n_cells = 32;
  std::size_t channels = 3;
  std::size_t height = 8;
  std::size_t width = 8;
  std::size_t k_true = 4;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::size_t classes = 2;
  /// When nonzero, each cell is also embedded at a random offset in a
  /// frame x frame raw image on a flat background (for focus selection).
  std::size_t frame = 0;

  void validate() const;
};

struct SynthDataset {
  std::vector<ChannelId> channels;
  std::vector<CellRecord> cells;          // noisy data
  std::vector<CellRecord> truth;          // noiseless data
  std::vector<int> labels;                // one class per cell
  std::vector<Eigen::MatrixXd> templates; // per channel, n x k_true (columns are images)
  std::vector<CellRecord> raw_frames;     // empty unless cfg.frame > 0
};

/// Channel names for the first `count` positions of the DPC Left, Right,
/// Top, Bottom, Brightfield ordering; further channels repeat the cycle with
/// a numeric suffix.
std::vector<ChannelId> default_channels(std::size_t count);

SynthDataset generate_synthetic(const SynthConfig& cfg);

/// Orthonormal basis (n x r) of the column space of `m`, r = numerical rank.
Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& m);

/// Principal angles (radians, ascending) between the column spaces of two
/// matrices with orthonormal columns.
Eigen::VectorXd principal_angles(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace celldict
