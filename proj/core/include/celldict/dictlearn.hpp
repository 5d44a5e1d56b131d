#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "celldict/image.hpp"
#include "celldict/pdhg.hpp"

namespace celldict {

/// n x K matrix with orthonormal columns (atoms).
class UnitaryDictionary {
 public:
  static constexpr double kUnitarityTolerance = 1e-10;

  /// Throws std::invalid_argument if K > n or |D^T D - I|_F > 1e-10.
  explicit UnitaryDictionary(Eigen::MatrixXd atoms);

  std::size_t signal_dim() const noexcept { return static_cast<std::size_t>(atoms_.rows()); }
  std::size_t atom_count() const noexcept { return static_cast<std::size_t>(atoms_.cols()); }
  const Eigen::MatrixXd& matrix() const noexcept { return atoms_; }

  double orthonormality_defect() const;

  /// D^T y.
  Eigen::VectorXd analyze(std::span<const double> y) const;
  /// D a, reshaped to height x width.
  Image synthesize(const Eigen::VectorXd& codes, std::size_t height, std::size_t width) const;

  friend bool operator==(const UnitaryDictionary& a, const UnitaryDictionary& b) {
    return a.atoms_.rows() == b.atoms_.rows() && a.atoms_.cols() == b.atoms_.cols() &&
           a.atoms_ == b.atoms_;
  }

 private:
  Eigen::MatrixXd atoms_;
};

using CodeVector = Eigen::VectorXd;

struct LearnConfig {
  std::size_t k = 512;
  std::size_t outer_iters = 30;
  double lambda0 = 0.05;
  double gamma = 3.0;
  double floor = 1e-4;
  double eps_dict = 1e-8;
  double eps_obj = 1e-6;
  std::size_t patience = 5;
  std::uint64_t seed = 0;
  PdhgParams pdhg;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

/// max(floor, lambda0 / (1 + gamma * t)).
double lambda_schedule(std::size_t t, const LearnConfig& cfg);

/// Orthonormal n x k matrix from the thin QR factor of a seeded Gaussian matrix.
UnitaryDictionary init_dictionary(std::size_t n, std::size_t k, std::uint64_t seed);

CodeVector backproject_codes(const UnitaryDictionary& dict, const Image& y);

/// Maximizer of tr(D^T M) over orthonormal-column D, M = data^T codes:
/// D = U V^T from the thin SVD of M. `data` is N x n, `codes` is N x K.
/// Throws DataError if M vanishes or is rank deficient.
UnitaryDictionary procrustes_update(const Eigen::MatrixXd& data, const Eigen::MatrixXd& codes);

/// |x - recon| / |x|. Throws DataError for a zero datum.
double relative_error(const Image& x, const Image& recon);

enum class StopReason { kDictChange, kObjChange, kMaxIters };
std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& s);

/// Diagnostics of one completed outer iteration.
struct OuterRecord {
  std::size_t iteration = 0;
  double lambda_tv = 0.0;
  double mean_fidelity = 0.0;       // mean of 1/2 |x_j - D a_j|^2 after the refresh
  double dict_change = 0.0;         // |D^{t+1} - D^t|_F
  double dict_change_rel = 0.0;     // ... / max(1, |D^t|_F)
  double mean_inner_residual = 0.0; // mean final |y^N - y^{N-1}|
  double max_inner_residual = 0.0;
  double inner_converged_fraction = 0.0;
  double total_objective = 0.0;     // mean fidelity + lambda * mean TV(y*)
  double mean_relative_error = 0.0;
  double max_relative_error = 0.0;
};

struct LearnReport {
  std::vector<OuterRecord> records;
  StopReason stop_reason = StopReason::kMaxIters;
  std::vector<double> final_relative_errors;  // per sample, final iteration
};

/// Everything needed to continue training exactly where it stopped.
struct TrainState {
  std::size_t next_iteration = 0;
  std::optional<UnitaryDictionary> dictionary;
  std::vector<CodeVector> codes;
  std::size_t patience_count = 0;
  std::optional<double> prev_fidelity;
  bool finished = false;
  LearnReport report;
};

struct TrainOptions {
  std::size_t threads = 1;
  /// Invoked after every outer iteration with the refreshed state.
  std::function<void(const TrainState&)> on_iteration;
  /// Continue from a saved state instead of initializing.
  const TrainState* resume = nullptr;
  /// Stop (unfinished) once this many outer iterations have completed.
  std::optional<std::size_t> stop_after;
};

struct ChannelModel {
  UnitaryDictionary dictionary;
  std::vector<CodeVector> codes;
  LearnReport report;
  double final_lambda = 0.0;
  bool finished = true;
};

/// Alternating learning loop for one channel: per-sample TV denoising,
/// back-projection of codes, Procrustes dictionary update, code refresh and
/// the patience-based outer stopping rule.
ChannelModel train_channel(std::span<const Image> data, const LearnConfig& cfg,
                           const TrainOptions& opts = {});

}  // namespace celldict
