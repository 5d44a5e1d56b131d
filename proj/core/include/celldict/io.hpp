#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "celldict/dictlearn.hpp"
#include "celldict/image.hpp"
#include "celldict/multichannel.hpp"

namespace celldict {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// CDIM images: 64-byte ASCII header "CDIM <h> <w>" padded with spaces and
// terminated by '\n', then h*w little-endian float32 values, row-major.
// ---------------------------------------------------------------------------

void write_cdim(const fs::path& path, const Image& img);
Image read_cdim(const fs::path& path);

// ---------------------------------------------------------------------------
// Dataset manifest (JSON). File references are relative to the manifest.
// ---------------------------------------------------------------------------

struct CellFiles {
  std::string cell_id;
  std::vector<std::string> files;  // one per channel, manifest channel order
};

/// Audit record of one focused crop.
struct CropAudit {
  std::string cell_id;
  std::string channel;
  std::size_t y = 0;
  std::size_t x = 0;
  std::size_t window = 0;
  std::size_t crop = 0;  // common size after the corpus-minimum center crop
  double min = 0.0;
  double max = 0.0;
};

struct DatasetManifest {
  std::vector<std::string> channels;
  std::size_t height = 0;  // 0 when frames may differ in size (raw data)
  std::size_t width = 0;
  std::vector<CellFiles> cells;
  std::string labels;  // labels CSV relative to the manifest, may be empty
  std::map<std::string, std::string> provenance;
  std::vector<CropAudit> crops;
  fs::path root;  // directory holding the manifest; not serialized
};

DatasetManifest read_manifest(const fs::path& path);
void write_manifest(const DatasetManifest& manifest, const fs::path& path);

/// Loads the listed channels (all when `channels` is empty) of every cell.
/// Throws DataError for missing files or shape mismatches.
std::vector<CellRecord> load_cells(const DatasetManifest& manifest,
                                   std::span<const std::string> channels = {});

/// Channel ids for the selection (all manifest channels when empty), in
/// selection order. Throws ConfigError for unknown names.
std::vector<ChannelId> select_channels(const DatasetManifest& manifest,
                                       std::span<const std::string> channels);

// ---------------------------------------------------------------------------
// Labels: two-column CSV "cell_id,class" with a header row.
// ---------------------------------------------------------------------------

struct LabelRow {
  std::string cell_id;
  int label = 0;
};

std::vector<LabelRow> read_labels(const fs::path& path);
void write_labels(const fs::path& path, std::span<const LabelRow> rows);

// ---------------------------------------------------------------------------
// Training checkpoints: text header followed by little-endian float64 blocks
// (dictionary column-major, codes per sample, final relative errors, report
// records).
// ---------------------------------------------------------------------------

struct Checkpoint {
  std::string channel;
  std::uint64_t seed = 0;
  std::string config_hash;
  TrainState state;
};

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const fs::path& path);

// ---------------------------------------------------------------------------
// Descriptor store: descriptors.bin (binary records) + descriptors.json.
// ---------------------------------------------------------------------------

struct DescriptorRecord {
  std::string cell_id;
  Eigen::VectorXd phi;  // C*K
  Eigen::VectorXd psi;  // K
  std::vector<double> residuals;
  std::vector<double> weights;
};

struct DescriptorStore {
  std::vector<std::string> channels;
  std::size_t atoms = 0;
  std::string config_hash;
  std::vector<DescriptorRecord> records;

  /// N x (C*K) matrix of phi rows, in record order.
  Eigen::MatrixXd phi_matrix() const;
};

DescriptorRecord to_record(const std::string& cell_id, const UnifiedDescriptor& d);
void write_descriptor_store(const fs::path& dir, const DescriptorStore& store);
DescriptorStore read_descriptor_store(const fs::path& dir);

// ---------------------------------------------------------------------------
// CSV helpers
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal form of a double ("inf"/"nan" for specials).
std::string format_double(double v);

void write_report_header(std::ostream& out);
void write_report_rows(std::ostream& out, const std::string& channel, const LearnReport& report);

}  // namespace celldict
