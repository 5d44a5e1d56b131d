#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "celldict/image.hpp"

namespace celldict {

// ---------------------------------------------------------------------------
// Reconstruction metrics
// ---------------------------------------------------------------------------

/// 100 * (1 - |x - recon| / |x|). Throws DataError for a zero datum.
double fidelity(const Image& x, const Image& recon);

/// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const Image& reference, const Image& recon, double peak = 1.0);

/// Percentage of runs in which at least `target_fraction` of the samples
/// have relative error <= eps. Each inner vector holds one run's per-sample
/// errors.
double success_rate(std::span<const std::vector<double>> runs, double eps, double target_fraction);

// ---------------------------------------------------------------------------
// Clustering agreement and cohesion
// ---------------------------------------------------------------------------

/// Adjusted Rand index from the contingency table. Labels may be arbitrary
/// integers.
double ari(std::span<const int> labels_a, std::span<const int> labels_b);

/// Mutual information normalized by the arithmetic mean of the two
/// entropies. Two single-cluster labelings score 1.
double nmi(std::span<const int> labels_a, std::span<const int> labels_b);

/// Mean silhouette with Euclidean distances; rows of `points` are samples.
/// Points in singleton clusters score 0. Throws if fewer than 2 clusters.
double silhouette(const Eigen::MatrixXd& points, std::span<const int> labels);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  std::size_t best_restart = 0;
  std::vector<double> restart_inertias;
};

/// Best of n_init Lloyd runs (lowest within-cluster sum of squares, ties to
/// the earlier restart). Restart r is initialized from k distinct points
/// drawn with a seed derived from (seed, r).
KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                    std::size_t n_init, std::size_t max_iter = 300);

/// Sum of squared distances of each point to its cluster mean.
double within_cluster_ss(const Eigen::MatrixXd& points, std::span<const int> labels);

struct PcaResult {
  Eigen::MatrixXd reduced;       // n x m scores
  Eigen::MatrixXd components;    // d x m, unit columns
  Eigen::RowVectorXd mean;       // 1 x d
  Eigen::VectorXd eigenvalues;   // all covariance eigenvalues, descending
  double explained_variance = 0.0;
};

/// Centers the rows and projects onto the top `components` covariance
/// eigenvectors. Each eigenvector's largest-magnitude coordinate is made
/// positive. All-identical points give zero scores and explained variance 0.
PcaResult pca_reduce(const Eigen::MatrixXd& points, std::size_t components);

struct ChannelLayout {
  std::size_t channels = 1;
  std::size_t atoms = 0;
};

/// Scales each channel block of every row to unit l2 norm (zero blocks stay
/// zero), then standardizes every column to mean 0 and population variance
/// 1 (zero-variance columns become 0).
Eigen::MatrixXd descriptor_preprocess(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                                      bool channel_l2 = true, bool standardize = true);

// ---------------------------------------------------------------------------
// Validation protocol
// ---------------------------------------------------------------------------

struct ClusterConfig {
  std::size_t k = 2;
  std::size_t n_init = 20;
  std::uint64_t seed = 0;
  std::size_t pca_components = 15;
  bool channel_l2 = true;
  bool standardize = true;
  std::size_t n_perm = 1000;
  std::size_t n_boot = 1000;
  std::size_t threads = 1;

  void validate() const;
};

struct Embedding {
  Eigen::MatrixXd points;
  double explained_variance = 0.0;
};

/// descriptor_preprocess followed by PCA to min(pca_components, n, d).
Embedding embed_descriptors(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                            const ClusterConfig& cfg);

struct NullSummary {
  double mean = 0.0;
  double p95 = 0.0;
};

struct PermutationResult {
  double observed_ari = 0.0;
  double observed_nmi = 0.0;
  double p_ari = 1.0;
  double p_nmi = 1.0;
  NullSummary ari_null;
  NullSummary nmi_null;
  std::vector<double> null_ari;
  std::vector<double> null_nmi;
};

/// Clusters `points` once, then compares the fixed clustering against
/// n_perm label shuffles. p = (1 + #{null >= observed}) / (1 + n_perm).
PermutationResult permutation_test(const Eigen::MatrixXd& points, std::span<const int> labels,
                                   const ClusterConfig& cfg, std::size_t n_perm);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BootstrapResult {
  Interval ari;
  Interval nmi;
  std::vector<double> samples_ari;
  std::vector<double> samples_nmi;
  std::size_t degenerate_resamples = 0;  // single-class resamples, scored 0
};

/// Percentile 95% intervals over n_boot resamples of the rows (with
/// replacement); each resample reruns embedding, clustering and metrics.
BootstrapResult bootstrap_ci(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                             std::span<const int> labels, const ClusterConfig& cfg,
                             std::size_t n_boot);

struct ValidationReport {
  std::size_t n_cells = 0;
  double ari = 0.0;
  double nmi = 0.0;
  double silhouette = 0.0;
  double explained_variance = 0.0;
  std::vector<int> clusters;
  PermutationResult permutation;
  BootstrapResult bootstrap;
};

ValidationReport run_validation(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                                std::span<const int> labels, const ClusterConfig& cfg);

/// Linear-interpolation percentile (q in [0, 1]) of unsorted values.
double percentile(std::vector<double> values, double q);

}  // namespace celldict
