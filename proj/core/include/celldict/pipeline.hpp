#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "celldict/config.hpp"
#include "celldict/io.hpp"
#include "celldict/multichannel.hpp"
#include "celldict/synth.hpp"
#include "celldict/validate.hpp"

namespace celldict {

// Run orchestration behind the command-line subcommands. Result artifacts
// are written under the output directory; timings and progress go to
// <out>/logs/ only, so two runs can be compared by diffing everything else.

struct SynthOutputs {
  fs::path manifest;      // cell-level dataset (ready for training)
  fs::path truth;         // noiseless cell-level dataset
  fs::path raw_manifest;  // raw frames, empty unless cfg.frame > 0
};

/// Writes a synthetic dataset: <out>/cells, <out>/truth and, with frames,
/// <out>/raw, each with its manifest and the labels CSV.
SynthOutputs cmd_synth(const SynthConfig& cfg, const fs::path& out);

/// Focus selection, cropping and normalization of every frame listed in
/// <raw_dir>/manifest.json. Writes <out>/manifest.json and <out>/cells/.
/// Frames that fail are skipped; if any failed, DataError is thrown after
/// the remaining output is written.
DatasetManifest cmd_preprocess(const fs::path& raw_dir, const fs::path& out, const RunConfig& cfg);

struct TrainControl {
  std::optional<std::size_t> stop_after;  // stop every channel after this many iterations
  std::optional<fs::path> resume;         // model directory holding checkpoints
};

struct TrainOutcome {
  MultiChannelModel model;
  bool finished = true;
};

/// Trains on cfg.dataset. Writes <out>/model (checkpoints + model.json),
/// <out>/report/convergence.csv and, when finished, <out>/descriptors.
TrainOutcome cmd_train(const RunConfig& cfg, const fs::path& out, const TrainControl& control = {});

/// Descriptors of every cell in cfg.dataset under the trained model in
/// `model_dir`, written to <out>/descriptors.
DescriptorStore cmd_describe(const RunConfig& cfg, const fs::path& model_dir, const fs::path& out);

/// Per-channel and unified reconstructions plus <out>/reconstruct/metrics.csv.
void cmd_reconstruct(const RunConfig& cfg, const fs::path& model_dir, const fs::path& out);

/// Clustering validation of the descriptor store against the labels.
/// Writes <out>/validation/{report.json,null.csv,bootstrap.csv,clusters.csv}.
ValidationReport cmd_validate(const RunConfig& cfg, const fs::path& descriptor_dir,
                              const fs::path& out);

/// Human-readable summary of whatever results exist under `out`; also
/// written to <out>/report/summary.txt.
void cmd_report(const fs::path& out, std::ostream& os);

struct ModelInfo {
  std::vector<std::string> channels;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t atoms = 0;
  std::vector<double> lambdas;  // final TV weight per channel
  std::vector<UnitaryDictionary> dictionaries;
  std::string config_hash;
  bool finished = false;
};

ModelInfo load_model(const fs::path& model_dir);

}  // namespace celldict
