#include "celldict/multichannel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "celldict/errors.hpp"
#include "celldict/parallel.hpp"

namespace celldict {

void check_cells(std::span<const CellRecord> cells, std::size_t channel_count) {
  if (cells.empty()) throw DataError("no cells");
  const Image empty;
  const Image& ref = cells.front().channels.empty() ? empty : cells.front().channels.front();
  for (const auto& cell : cells) {
    if (cell.channels.size() != channel_count) {
      throw DataError("cell '" + cell.cell_id + "' has " + std::to_string(cell.channels.size()) +
                      " channels, expected " + std::to_string(channel_count));
    }
    for (const auto& img : cell.channels) {
      if (img.empty() || !img.same_shape(ref)) {
        throw DataError("cell '" + cell.cell_id + "' has an image of inconsistent shape");
      }
    }
  }
}

namespace {

template <typename Fn>
auto with_channel_context(const ChannelId& channel, Fn&& fn) {
  const std::string prefix = "channel " + channel.name + ": ";
  try {
    return fn();
  } catch (const NumericalDivergence& e) {
    throw NumericalDivergence(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  }
}

}  // namespace

MultiChannelModel train_multichannel(std::span<const CellRecord> cells,
                                     std::span<const ChannelId> channels, const LearnConfig& cfg,
                                     const TrainOptions& opts) {
  MultiTrainOptions multi;
  multi.threads = opts.threads;
  multi.stop_after = opts.stop_after;
  if (opts.on_iteration) {
    multi.on_iteration = [&](std::size_t, const TrainState& s) { opts.on_iteration(s); };
  }
  if (opts.resume != nullptr) multi.resume.assign(channels.size(), opts.resume);
  return train_multichannel(cells, channels, cfg, multi);
}

MultiChannelModel train_multichannel(std::span<const CellRecord> cells,
                                     std::span<const ChannelId> channels, const LearnConfig& cfg,
                                     const MultiTrainOptions& opts) {
  if (channels.empty()) throw ConfigError("no channels selected");
  check_cells(cells, channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].index != c) throw ConfigError("channel indices must be 0..C-1 in order");
  }
  if (!opts.resume.empty() && opts.resume.size() != channels.size()) {
    throw ConfigError("resume states must be given for every channel");
  }

  MultiChannelModel model;
  model.channels.assign(channels.begin(), channels.end());
  bool all_finished = true;
  for (const ChannelId& channel : channels) {
    std::vector<Image> data;
    data.reserve(cells.size());
    for (const auto& cell : cells) data.push_back(cell.channels[channel.index]);
    TrainOptions single;
    single.threads = opts.threads;
    single.stop_after = opts.stop_after;
    if (!opts.resume.empty()) single.resume = opts.resume[channel.index];
    if (opts.on_iteration) {
      single.on_iteration = [&](const TrainState& s) { opts.on_iteration(channel.index, s); };
    }
    model.per_channel.push_back(
        with_channel_context(channel, [&] { return train_channel(data, cfg, single); }));
    all_finished = all_finished && model.per_channel.back().finished;
  }
  if (!all_finished) return model;

  std::vector<UnitaryDictionary> dicts;
  for (const auto& m : model.per_channel) dicts.push_back(m.dictionary);
  model.descriptors.resize(cells.size());
  parallel_for(cells.size(), opts.threads, [&](std::size_t j) {
    std::vector<CodeVector> codes;
    for (const auto& m : model.per_channel) codes.push_back(m.codes[j]);
    model.descriptors[j] = build_descriptor(codes, dicts, cells[j], opts.descriptor_eps);
  });
  return model;
}

UnifiedDescriptor build_descriptor(std::span<const CodeVector> codes,
                                   std::span<const UnitaryDictionary> dicts,
                                   const CellRecord& cell, double epsilon) {
  const std::size_t c_count = codes.size();
  if (c_count == 0) throw std::invalid_argument("build_descriptor: no channels");
  if (dicts.size() != c_count || cell.channels.size() != c_count) {
    throw std::invalid_argument("build_descriptor: channel count mismatch");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("build_descriptor: epsilon must be > 0");
  const auto k = codes.front().size();
  for (std::size_t c = 0; c < c_count; ++c) {
    if (codes[c].size() != k || static_cast<Eigen::Index>(dicts[c].atom_count()) != k) {
      throw std::invalid_argument("build_descriptor: inconsistent atom counts");
    }
  }

  UnifiedDescriptor d;
  const auto cc = static_cast<Eigen::Index>(c_count);
  d.Phi.resize(k, cc);
  for (Eigen::Index c = 0; c < cc; ++c) d.Phi.col(c) = codes[static_cast<std::size_t>(c)];
  d.phi = d.Phi.reshaped();  // column-major vectorization
  d.psi.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < cc; ++c) s += d.Phi(i, c) * d.Phi(i, c);
    d.psi(i) = std::sqrt(s);
  }

  const std::size_t h = cell.channels.front().height();
  const std::size_t w = cell.channels.front().width();
  std::vector<Image> recon;
  recon.reserve(c_count);
  d.residuals.resize(c_count);
  d.weights.resize(c_count);
  double weight_sum = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) {
    recon.push_back(dicts[c].synthesize(codes[c], h, w));
    d.residuals[c] = distance2(cell.channels[c].values(), recon.back().values());
    d.weights[c] = 1.0 / (d.residuals[c] + epsilon);
    weight_sum += d.weights[c];
  }
  for (double& wt : d.weights) wt /= weight_sum;

  d.unified = Image(h, w);
  for (std::size_t c = 0; c < c_count; ++c) {
    for (std::size_t i = 0; i < d.unified.size(); ++i) d.unified[i] += d.weights[c] * recon[c][i];
  }
  return d;
}

std::vector<CodeVector> infer_codes(const CellRecord& cell, std::span<const UnitaryDictionary> dicts,
                                    std::span<const double> lambdas, const PdhgParams& pdhg) {
  if (cell.channels.size() != dicts.size() || lambdas.size() != dicts.size()) {
    throw std::invalid_argument("infer_codes: channel count mismatch");
  }
  std::vector<CodeVector> codes;
  codes.reserve(dicts.size());
  for (std::size_t c = 0; c < dicts.size(); ++c) {
    const PdhgResult r = solve(cell.channels[c], pdhg.with_lambda(lambdas[c]));
    codes.push_back(backproject_codes(dicts[c], r.y));
  }
  return codes;
}

std::vector<std::size_t> rank_atoms(const UnifiedDescriptor& descriptor, std::size_t top_m) {
  const auto k = static_cast<std::size_t>(descriptor.psi.size());
  if (top_m == 0 || top_m > k) throw std::invalid_argument("rank_atoms: top_m must be in [1, K]");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descriptor.psi(static_cast<Eigen::Index>(a)) > descriptor.psi(static_cast<Eigen::Index>(b));
  });
  order.resize(top_m);
  return order;
}

}  // namespace celldict
