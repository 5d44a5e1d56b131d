#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "celldict/dictlearn.hpp"
#include "celldict/image.hpp"

namespace celldict {

struct ChannelId {
  std::size_t index = 0;
  std::string name;

  friend bool operator==(const ChannelId&, const ChannelId&) = default;
};

/// One cell: a focused, normalized image per channel, all of one shape.
struct CellRecord {
  std::string cell_id;
  std::vector<Image> channels;
};

struct UnifiedDescriptor {
  Eigen::VectorXd phi;           // C*K, channel-major concatenation of the codes
  Eigen::MatrixXd Phi;           // K x C, column c = code of channel c
  Eigen::VectorXd psi;           // psi_k = |Phi(k, :)|
  Image unified;                 // inverse-residual-weighted average reconstruction
  std::vector<double> weights;   // normalized to sum 1
  std::vector<double> residuals; // |x^(c) - D^(c) a^(c)|
};

struct MultiChannelModel {
  std::vector<ChannelId> channels;
  std::vector<ChannelModel> per_channel;
  std::vector<UnifiedDescriptor> descriptors;  // one per training cell
};

/// Throws DataError unless every cell carries `channel_count` images of one
/// common shape.
void check_cells(std::span<const CellRecord> cells, std::size_t channel_count);

/// Trains an independent dictionary per channel (same seed for every
/// channel) and builds the unified descriptor of every training cell.
/// Failures are rethrown with the channel name prepended.
MultiChannelModel train_multichannel(std::span<const CellRecord> cells,
                                     std::span<const ChannelId> channels, const LearnConfig& cfg,
                                     const TrainOptions& opts = {});

struct MultiTrainOptions {
  std::size_t threads = 1;
  /// Called after every outer iteration of channel `c`.
  std::function<void(std::size_t c, const TrainState&)> on_iteration;
  /// Per-channel resume states (empty, or one entry per channel; null
  /// entries start fresh).
  std::vector<const TrainState*> resume;
  std::optional<std::size_t> stop_after;
  double descriptor_eps = 1e-8;
};

/// As above, with per-channel resume and progress hooks. Descriptors are
/// built only when every channel has finished.
MultiChannelModel train_multichannel(std::span<const CellRecord> cells,
                                     std::span<const ChannelId> channels, const LearnConfig& cfg,
                                     const MultiTrainOptions& opts);

UnifiedDescriptor build_descriptor(std::span<const CodeVector> codes,
                                   std::span<const UnitaryDictionary> dicts,
                                   const CellRecord& cell, double epsilon = 1e-8);

/// Codes of a new cell under trained dictionaries: per channel, TV-denoise
/// the datum at that channel's lambda and back-project.
std::vector<CodeVector> infer_codes(const CellRecord& cell, std::span<const UnitaryDictionary> dicts,
                                    std::span<const double> lambdas, const PdhgParams& pdhg);

/// Indices of the top_m atoms by psi, descending; ties by ascending index.
std::vector<std::size_t> rank_atoms(const UnifiedDescriptor& descriptor, std::size_t top_m);

}  // namespace celldict
