#include "celldict/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "celldict/errors.hpp"
#include "celldict/parallel.hpp"

namespace celldict {

double fidelity(const Image& x, const Image& recon) {
  if (!x.same_shape(recon)) throw std::invalid_argument("fidelity: shape mismatch");
  const double nx = norm2(x.values());
  if (nx == 0.0) throw DataError("fidelity: zero datum");
  return 100.0 * (1.0 - distance2(x.values(), recon.values()) / nx);
}

double psnr(const Image& reference, const Image& recon, double peak) {
  if (!reference.same_shape(recon)) throw std::invalid_argument("psnr: shape mismatch");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  const double d = distance2(reference.values(), recon.values());
  const double mse = d * d / static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double success_rate(std::span<const std::vector<double>> runs, double eps, double target_fraction) {
  if (runs.empty()) throw std::invalid_argument("success_rate: no runs");
  if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
    throw std::invalid_argument("success_rate: target_fraction must lie in (0, 1]");
  }
  std::size_t successes = 0;
  for (const auto& errors : runs) {
    if (errors.empty()) throw std::invalid_argument("success_rate: run without samples");
    const auto ok = std::count_if(errors.begin(), errors.end(), [eps](double e) { return e <= eps; });
    if (static_cast<double>(ok) >= target_fraction * static_cast<double>(errors.size())) ++successes;
  }
  return 100.0 * static_cast<double>(successes) / static_cast<double>(runs.size());
}

namespace {

struct Contingency {
  std::vector<std::vector<double>> table;  // rows: classes of a, cols: classes of b
  std::vector<double> rows;
  std::vector<double> cols;
  double n = 0.0;
};

std::vector<int> compact(std::span<const int> labels, std::size_t& count) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [label, id] : ids) id = next++;
  count = ids.size();
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

Contingency contingency(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("label vectors differ in length");
  if (a.size() < 2) throw std::invalid_argument("need at least two labeled samples");
  std::size_t ka = 0;
  std::size_t kb = 0;
  const auto ca = compact(a, ka);
  const auto cb = compact(b, kb);
  Contingency t;
  t.table.assign(ka, std::vector<double>(kb, 0.0));
  t.rows.assign(ka, 0.0);
  t.cols.assign(kb, 0.0);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    t.table[static_cast<std::size_t>(ca[i])][static_cast<std::size_t>(cb[i])] += 1.0;
    t.rows[static_cast<std::size_t>(ca[i])] += 1.0;
    t.cols[static_cast<std::size_t>(cb[i])] += 1.0;
  }
  t.n = static_cast<double>(a.size());
  return t;
}

double pairs(double m) { return m * (m - 1.0) / 2.0; }

}  // namespace

double ari(std::span<const int> labels_a, std::span<const int> labels_b) {
  const Contingency t = contingency(labels_a, labels_b);
  double index = 0.0;
  for (const auto& row : t.table) {
    for (double v : row) index += pairs(v);
  }
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (double v : t.rows) sum_a += pairs(v);
  for (double v : t.cols) sum_b += pairs(v);
  const double expected = sum_a * sum_b / pairs(t.n);
  const double max_index = 0.5 * (sum_a + sum_b);
  // Zero denominator only for two identical trivial partitions.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double nmi(std::span<const int> labels_a, std::span<const int> labels_b) {
  const Contingency t = contingency(labels_a, labels_b);
  auto entropy = [&](const std::vector<double>& marg) {
    double h = 0.0;
    for (double v : marg) {
      if (v > 0.0) h -= (v / t.n) * std::log(v / t.n);
    }
    return h;
  };
  const double ha = entropy(t.rows);
  const double hb = entropy(t.cols);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < t.cols.size(); ++j) {
      const double v = t.table[i][j];
      if (v > 0.0) mi += (v / t.n) * std::log(v * t.n / (t.rows[i] * t.cols[j]));
    }
  }
  const double denom = 0.5 * (ha + hb);
  return std::clamp(mi / denom, 0.0, 1.0);
}

double silhouette(const Eigen::MatrixXd& points, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (labels.size() != n) throw std::invalid_argument("silhouette: label count mismatch");
  std::size_t k = 0;
  const auto lab = compact(labels, k);
  if (k < 2) throw std::invalid_argument("silhouette: need at least two clusters");
  std::vector<double> sizes(k, 0.0);
  for (int l : lab) sizes[static_cast<std::size_t>(l)] += 1.0;

  double total = 0.0;
  std::vector<double> dist_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto own = static_cast<std::size_t>(lab[i]);
    if (sizes[own] <= 1.0) continue;  // singleton scores 0
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[static_cast<std::size_t>(lab[j])] +=
          (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
    }
    const double a = dist_sum[own] / (sizes[own] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, dist_sum[c] / sizes[c]);
    }
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return total / static_cast<double>(n);
}

double within_cluster_ss(const Eigen::MatrixXd& points, std::span<const int> labels) {
  if (static_cast<std::size_t>(points.rows()) != labels.size()) {
    throw std::invalid_argument("within_cluster_ss: label count mismatch");
  }
  std::size_t k = 0;
  const auto lab = compact(labels, k);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), points.cols());
  std::vector<double> counts(k, 0.0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    sums.row(lab[static_cast<std::size_t>(i)]) += points.row(i);
    counts[static_cast<std::size_t>(lab[static_cast<std::size_t>(i)])] += 1.0;
  }
  double wcss = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int c = lab[static_cast<std::size_t>(i)];
    wcss += (points.row(i) - sums.row(c) / counts[static_cast<std::size_t>(c)]).squaredNorm();
  }
  return wcss;
}

namespace {

struct LloydRun {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
};

LloydRun lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centroids, std::size_t max_iter) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centroids.rows();
  LloydRun run;
  run.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> d2(static_cast<std::size_t>(n), 0.0);

  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      auto& slot = run.labels[static_cast<std::size_t>(i)];
      if (slot != best) changed = true;
      slot = best;
      d2[static_cast<std::size_t>(i)] = best_d;
    }
    if (!changed && it > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = run.labels[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      counts[static_cast<std::size_t>(c)] += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0.0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        // Empty cluster: re-seed it at the point farthest from its centroid.
        const auto far = static_cast<Eigen::Index>(
            std::max_element(d2.begin(), d2.end()) - d2.begin());
        centroids.row(c) = points.row(far);
        d2[static_cast<std::size_t>(far)] = 0.0;
        run.labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
      }
    }
  }

  run.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    run.inertia += (points.row(i) - centroids.row(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed,
                    std::size_t n_init, std::size_t max_iter) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) throw std::invalid_argument("kmeans: k exceeds the number of points");
  if (n_init == 0) throw std::invalid_argument("kmeans: n_init must be >= 1");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < n_init; ++r) {
    std::mt19937_64 rng(substream_seed(seed, r));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first k entries are a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    Eigen::MatrixXd init(static_cast<Eigen::Index>(k), points.cols());
    for (std::size_t c = 0; c < k; ++c) {
      init.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(idx[c]));
    }
    LloydRun run = lloyd(points, std::move(init), max_iter);
    best.restart_inertias.push_back(run.inertia);
    if (run.inertia < best.inertia) {
      best.inertia = run.inertia;
      best.labels = std::move(run.labels);
      best.centroids = std::move(run.centroids);
      best.best_restart = r;
    }
  }
  return best;
}

PcaResult pca_reduce(const Eigen::MatrixXd& points, std::size_t components) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("pca_reduce: empty input");
  const auto m = static_cast<Eigen::Index>(components);
  if (m == 0 || m > std::min(n, d)) {
    throw std::invalid_argument("pca_reduce: components must lie in [1, min(n, d)]");
  }

  PcaResult out;
  out.mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - out.mean;
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const double total = centered.squaredNorm() / denom;

  if (total == 0.0) {
    out.components = Eigen::MatrixXd::Identity(d, m);
    out.reduced = Eigen::MatrixXd::Zero(n, m);
    out.eigenvalues = Eigen::VectorXd::Zero(std::min(n, d));
    out.explained_variance = 0.0;
    return out;
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  out.eigenvalues = svd.singularValues().array().square() / denom;
  out.components = svd.matrixV().leftCols(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double a = std::abs(out.components(i, c));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (out.components(arg, c) < 0.0) out.components.col(c) *= -1.0;
  }
  out.reduced = centered * out.components;
  out.explained_variance = std::min(1.0, out.eigenvalues.head(m).sum() / total);
  return out;
}

Eigen::MatrixXd descriptor_preprocess(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                                      bool channel_l2, bool standardize) {
  if (layout.channels == 0 || layout.atoms == 0 ||
      static_cast<std::size_t>(descriptors.cols()) != layout.channels * layout.atoms) {
    throw std::invalid_argument("descriptor_preprocess: descriptor width does not match layout");
  }
  Eigen::MatrixXd out = descriptors;
  const auto k = static_cast<Eigen::Index>(layout.atoms);
  if (channel_l2) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (std::size_t c = 0; c < layout.channels; ++c) {
        auto block = out.row(i).segment(static_cast<Eigen::Index>(c) * k, k);
        const double nrm = block.norm();
        if (nrm > 0.0) block /= nrm;
      }
    }
  }
  if (standardize) {
    const auto n = static_cast<double>(out.rows());
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      auto col = out.col(j);
      const double mean = col.sum() / n;
      col.array() -= mean;
      const double sd = std::sqrt(col.squaredNorm() / n);
      if (sd > 0.0) {
        col /= sd;
      } else {
        col.setZero();
      }
    }
  }
  return out;
}

void ClusterConfig::validate() const {
  if (k < 1) throw ConfigError("cluster k must be >= 1");
  if (n_init < 1) throw ConfigError("n_init must be >= 1");
  if (pca_components < 1) throw ConfigError("pca_components must be >= 1");
}

Embedding embed_descriptors(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                            const ClusterConfig& cfg) {
  const Eigen::MatrixXd pre =
      descriptor_preprocess(descriptors, layout, cfg.channel_l2, cfg.standardize);
  const std::size_t m = std::min({cfg.pca_components, static_cast<std::size_t>(pre.rows()),
                                  static_cast<std::size_t>(pre.cols())});
  PcaResult pca = pca_reduce(pre, m);
  return {std::move(pca.reduced), pca.explained_variance};
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

constexpr std::uint64_t kPermutationStream = 0x7065726d75746531ULL;
constexpr std::uint64_t kBootstrapStream = 0x626f6f7473747261ULL;

NullSummary summarize(const std::vector<double>& v) {
  NullSummary s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.p95 = percentile(v, 0.95);
  return s;
}

}  // namespace

PermutationResult permutation_test(const Eigen::MatrixXd& points, std::span<const int> labels,
                                   const ClusterConfig& cfg, std::size_t n_perm) {
  if (n_perm == 0) throw std::invalid_argument("permutation_test: n_perm must be >= 1");
  if (static_cast<std::size_t>(points.rows()) != labels.size()) {
    throw std::invalid_argument("permutation_test: label count mismatch");
  }
  const KMeansResult km = kmeans(points, cfg.k, cfg.seed, cfg.n_init);
  PermutationResult out;
  out.observed_ari = ari(labels, km.labels);
  out.observed_nmi = nmi(labels, km.labels);
  out.null_ari.resize(n_perm);
  out.null_nmi.resize(n_perm);
  parallel_for(n_perm, cfg.threads, [&](std::size_t i) {
    std::mt19937_64 rng(substream_seed(cfg.seed ^ kPermutationStream, i));
    std::vector<int> shuffled(labels.begin(), labels.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    out.null_ari[i] = ari(shuffled, km.labels);
    out.null_nmi[i] = nmi(shuffled, km.labels);
  });
  const auto exceed = [](const std::vector<double>& null, double obs) {
    return static_cast<double>(std::count_if(null.begin(), null.end(), [obs](double v) { return v >= obs; }));
  };
  const double denom = 1.0 + static_cast<double>(n_perm);
  out.p_ari = (1.0 + exceed(out.null_ari, out.observed_ari)) / denom;
  out.p_nmi = (1.0 + exceed(out.null_nmi, out.observed_nmi)) / denom;
  out.ari_null = summarize(out.null_ari);
  out.nmi_null = summarize(out.null_nmi);
  return out;
}

BootstrapResult bootstrap_ci(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                             std::span<const int> labels, const ClusterConfig& cfg,
                             std::size_t n_boot) {
  if (n_boot == 0) throw std::invalid_argument("bootstrap_ci: n_boot must be >= 1");
  const auto n = static_cast<std::size_t>(descriptors.rows());
  if (labels.size() != n) throw std::invalid_argument("bootstrap_ci: label count mismatch");

  BootstrapResult out;
  out.samples_ari.resize(n_boot);
  out.samples_nmi.resize(n_boot);
  std::vector<char> degenerate(n_boot, 0);
  parallel_for(n_boot, cfg.threads, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(cfg.seed ^ kBootstrapStream, b));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    Eigen::MatrixXd sample(descriptors.rows(), descriptors.cols());
    std::vector<int> sample_labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src = pick(rng);
      sample.row(static_cast<Eigen::Index>(i)) = descriptors.row(static_cast<Eigen::Index>(src));
      sample_labels[i] = labels[src];
    }
    const bool one_class = std::all_of(sample_labels.begin(), sample_labels.end(),
                                       [&](int l) { return l == sample_labels.front(); });
    if (one_class) {
      degenerate[b] = 1;
      out.samples_ari[b] = 0.0;
      out.samples_nmi[b] = 0.0;
      return;
    }
    const Embedding emb = embed_descriptors(sample, layout, cfg);
    const KMeansResult km = kmeans(emb.points, cfg.k, cfg.seed, cfg.n_init);
    out.samples_ari[b] = ari(sample_labels, km.labels);
    out.samples_nmi[b] = nmi(sample_labels, km.labels);
  });
  out.degenerate_resamples =
      static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
  out.ari = {percentile(out.samples_ari, 0.025), percentile(out.samples_ari, 0.975)};
  out.nmi = {percentile(out.samples_nmi, 0.025), percentile(out.samples_nmi, 0.975)};
  return out;
}

ValidationReport run_validation(const Eigen::MatrixXd& descriptors, ChannelLayout layout,
                                std::span<const int> labels, const ClusterConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(descriptors.rows());
  if (labels.size() != n) throw DataError("labels do not match the descriptor count");
  if (n < cfg.k || n < 2) {
    throw DataError("validation needs at least k = " + std::to_string(cfg.k) + " labeled cells");
  }
  if (cfg.k < 2) throw ConfigError("validation needs k >= 2 clusters");

  ValidationReport rep;
  rep.n_cells = n;
  const Embedding emb = embed_descriptors(descriptors, layout, cfg);
  rep.explained_variance = emb.explained_variance;
  const KMeansResult km = kmeans(emb.points, cfg.k, cfg.seed, cfg.n_init);
  rep.clusters = km.labels;
  rep.ari = ari(labels, km.labels);
  rep.nmi = nmi(labels, km.labels);
  std::size_t distinct = 0;
  compact(km.labels, distinct);
  rep.silhouette = distinct >= 2 ? silhouette(emb.points, km.labels) : 0.0;
  rep.permutation = permutation_test(emb.points, labels, cfg, cfg.n_perm);
  rep.bootstrap = bootstrap_ci(descriptors, layout, labels, cfg, cfg.n_boot);
  return rep;
}

}  // namespace celldict
