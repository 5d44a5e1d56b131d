#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "celldict/dictlearn.hpp"
#include "celldict/validate.hpp"

namespace celldict {

/// Everything a pipeline run needs. Stored as JSON; unknown keys are
/// rejected so typos surface as configuration errors.
struct RunConfig {
  std::string dataset;                // dataset manifest path
  std::vector<std::string> channels;  // subset/order of manifest channels; empty = all
  std::string labels;                 // labels CSV; empty = the manifest's label file
  std::vector<int> keep_classes;      // classes retained for validation; empty = all
  LearnConfig learn;
  ClusterConfig cluster;
  double descriptor_eps = 1e-8;
  std::string out = "out";
  bool trace = false;                 // write per-solve PDHG traces for the first cell
  std::size_t threads = 1;

  void validate() const;
};

std::string to_json(const RunConfig& cfg);
/// Throws ConfigError on malformed JSON, unknown keys or invalid values.
RunConfig run_config_from_json(const std::string& text);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

/// 16 hex digits (FNV-1a, 64 bit) over the canonical form of every setting
/// that can change a result. Paths, thread count and trace flag excluded.
std::string config_hash(const RunConfig& cfg);

}  // namespace celldict
