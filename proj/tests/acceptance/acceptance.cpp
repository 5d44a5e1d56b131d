// Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit if
// anything fails. Runtime budgets are part of each criterion.
#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "celldict/dictlearn.hpp"
#include "celldict/errors.hpp"
#include "celldict/imgops.hpp"
#include "celldict/io.hpp"
#include "celldict/multichannel.hpp"
#include "celldict/pdhg.hpp"
#include "celldict/pipeline.hpp"
#include "celldict/synth.hpp"
#include "celldict/validate.hpp"
#include "oracles.hpp"
#include "random.hpp"
#include "tree.hpp"

using namespace celldict;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

// Collects failed checks; the first few are reported.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) msgs_ << (failures_ > 1 ? "; " : "") << what;
  }
  void note(const std::string& s) { notes_ << (notes_.tellp() > 0 ? ", " : "") << s; }
  Outcome outcome() const {
    if (failures_ == 0) return {Status::kPass, notes_.str()};
    std::ostringstream s;
    s << failures_ << " failed check(s): " << msgs_.str();
    return {Status::kFail, s.str()};
  }

 private:
  int failures_ = 0;
  std::ostringstream msgs_;
  std::ostringstream notes_;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double rel_l2(const Image& a, const Image& ref) {
  return distance2(a.values(), ref.values()) / std::max(norm2(ref.values()), 1e-300);
}

// 1. Adjoint identity
Outcome adjoint_identity() {
  Checks c;
  testutil::Rng rng(1001);
  std::uniform_int_distribution<std::size_t> size(2, 64);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t h = size(rng);
    const std::size_t w = size(rng);
    const Image y = testutil::random_image(h, w, rng, -1.0, 1.0);
    const GradientField q = testutil::random_field(h, w, rng);
    const double gap = std::abs(dot(gradient(y), q) - dot(y.values(), gradient_adjoint(q).values()));
    const double rel = gap / (norm2(y.values()) * norm2(q));
    worst = std::max(worst, rel);
    c.expect(rel <= 1e-10, std::to_string(h) + "x" + std::to_string(w) + " rel " + fmt(rel));
  }
  c.note("worst relative gap " + fmt(worst));
  return c.outcome();
}

// 2. Spectral bound
Outcome spectral_bound() {
  Checks c;
  for (std::size_t n = 2; n <= 64; ++n) {
    const double est = operator_norm_sq_estimate(n, n, 50);
    c.expect(est <= 8.0 + 1e-9, std::to_string(n) + "x" + std::to_string(n) + " estimate " + fmt(est));
  }
  const double big = operator_norm_sq_estimate(64, 64, 500);
  c.expect(big > 7.9, "64x64 estimate " + fmt(big));
  c.expect(big <= 8.0 + 1e-9, "64x64 estimate above 8: " + fmt(big));
  c.note("64x64 estimate " + fmt(big));
  return c.outcome();
}

// 3. PDHG correctness against an independent long-run iteration
Outcome pdhg_correctness() {
  Checks c;
  testutil::Rng rng(1003);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Image x = testutil::random_image(8, 8, rng);
    for (double lambda : {0.01, 0.1, 1.0}) {
      const PdhgParams p = PdhgParams().with_lambda(lambda).with_tolerance(1e-10).with_max_iters(200000);
      const Image y = solve(x, p).y;
      const Image ref = oracle::tv_denoise_reference(x, lambda, 200000);
      const double err = rel_l2(y, ref);
      worst = std::max(worst, err);
      c.expect(err <= 1e-6, "problem " + std::to_string(t) + " lambda " + fmt(lambda) + " err " + fmt(err));
    }
  }
  c.note("worst relative error " + fmt(worst));
  return c.outcome();
}

// 4. Step-size gate
Outcome step_gate() {
  Checks c;
  const auto rejected = [](double tau, double sigma) {
    try {
      PdhgParams(tau, sigma, 1.0, 0.1, 100, 1e-7);
    } catch (const ConfigError&) {
      return true;
    }
    return false;
  };
  c.expect(rejected(0.5, 0.25), "tau*sigma = 1/8 accepted");
  c.expect(rejected(1.0, 0.5), "tau*sigma = 1/2 accepted");
  c.expect(rejected(0.4, 0.4), "tau*sigma = 0.16 accepted");
  bool accepted = true;
  try {
    PdhgParams(0.25, 0.25, 1.0, 0.1, 100, 1e-7);
  } catch (const ConfigError&) {
    accepted = false;
  }
  c.expect(accepted, "tau = sigma = 1/4 rejected");
  const PdhgParams def;
  c.expect(def.tau() == 0.25 && def.sigma() == 0.25 && def.theta() == 1.0, "defaults differ from 1/4, 1/4, 1");
  double worst = 0.0;
  for (std::size_t n = 2; n <= 64; n += 2) {
    worst = std::max(worst, def.tau() * def.sigma() * operator_norm_sq_estimate(n, n, 100));
  }
  c.expect(worst <= 0.5 + 1e-12, "tau*sigma*|grad|^2 = " + fmt(worst));
  c.note("max tau*sigma*|grad|^2 " + fmt(worst));
  return c.outcome();
}

// 5. Geometric decay of the squared iterate error, over the TV weights the
// learning schedule visits (lambda0 down to the floor).
Outcome geometric_decay() {
  Checks c;
  testutil::Rng rng(1005);
  double steepest = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 10; ++t) {
    const Image x = testutil::smooth_image(8, 8, rng);
    for (double lambda : {0.05, 0.01, 1e-4}) {
      const PdhgParams p = PdhgParams().with_lambda(lambda);
      const Image ystar = solve(x, p.with_tolerance(1e-15).with_max_iters(200000)).y;
      std::vector<double> err;
      solve(x, p.with_max_iters(60).with_tolerance(1e-300), [&](const PdhgState& s) {
        const double d = distance2(s.y.values(), ystar.values());
        err.push_back(d * d);
      });
      const std::string tag = "problem " + std::to_string(t) + " lambda " + fmt(lambda);
      if (err.size() < 60) {
        c.expect(false, tag + " stopped after " + std::to_string(err.size()));
        continue;
      }
      std::vector<double> n;
      std::vector<double> le;
      for (std::size_t i = 10; i <= 60; ++i) {
        n.push_back(static_cast<double>(i));
        le.push_back(std::log(std::max(err[i - 1], 1e-300)));
      }
      const double s = slope(n, le);
      steepest = std::max(steepest, s);
      c.expect(s <= std::log(0.9), tag + " slope " + fmt(s));
    }
  }
  c.note("largest slope " + fmt(steepest) + " (bound " + fmt(std::log(0.9)) + ")");
  return c.outcome();
}

// 6. O(delta) stability
Outcome delta_stability() {
  Checks c;
  SynthConfig sc;
  sc.n_cells = 1;
  sc.channels = 1;
  sc.height = 16;
  sc.width = 16;
  sc.seed = 1006;
  const Image clean = generate_synthetic(sc).truth.front().channels.front();
  testutil::Rng rng(1006);
  std::normal_distribution<double> g;
  std::vector<double> dir(clean.size());
  for (double& v : dir) v = g(rng);
  const double dn = norm2(dir);
  const Image y0 = solve(clean, PdhgParams().with_lambda(0.0)).y;
  std::vector<double> ld;
  std::vector<double> le;
  for (double delta : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    Image noisy = clean;
    for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += delta * dir[i] / dn;
    const PdhgParams p = PdhgParams().with_lambda(delta).with_tolerance(1e-12).with_max_iters(200000);
    const double e = distance2(solve(noisy, p).y.values(), y0.values());
    ld.push_back(std::log(delta));
    le.push_back(std::log(e));
  }
  const double s = slope(ld, le);
  c.expect(std::abs(s - 1.0) <= 0.2, "log-log slope " + fmt(s));
  c.note("log-log slope " + fmt(s));
  return c.outcome();
}

// 7. Unitarity after every dictionary update
Outcome unitarity() {
  Checks c;
  SynthConfig sc;
  sc.n_cells = 32;
  sc.channels = 3;
  sc.seed = 1007;
  sc.noise = 0.01;
  const SynthDataset ds = generate_synthetic(sc);
  LearnConfig lc;
  lc.k = 4;
  lc.outer_iters = 10;
  lc.eps_dict = 1e-300;
  lc.eps_obj = 1e-300;
  double worst = 0.0;
  std::size_t updates = 0;
  MultiTrainOptions opts;
  opts.on_iteration = [&](std::size_t, const TrainState& s) {
    ++updates;
    worst = std::max(worst, s.dictionary->orthonormality_defect());
  };
  const MultiChannelModel m = train_multichannel(ds.cells, ds.channels, lc, opts);
  c.expect(updates == 30, "observed " + std::to_string(updates) + " updates, expected 30");
  c.expect(worst <= 1e-10, "defect " + fmt(worst));
  for (const auto& pc : m.per_channel) c.expect(pc.dictionary.orthonormality_defect() <= 1e-10, "final defect");
  c.note("worst defect " + fmt(worst));
  return c.outcome();
}

// 8. Procrustes optimality
Outcome procrustes_optimality() {
  Checks c;
  testutil::Rng rng(1008);
  double tightest = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd data = testutil::gaussian_matrix(7, 5, rng);
    const Eigen::MatrixXd codes = testutil::gaussian_matrix(7, 2, rng);
    const Eigen::MatrixXd m = data.transpose() * codes;
    const UnitaryDictionary d = procrustes_update(data, codes);
    const double best = (d.matrix().transpose() * m).trace();
    for (int s = 0; s < 10000; ++s) {
      const Eigen::MatrixXd q = testutil::random_orthonormal(5, 2, rng);
      const double v = (q.transpose() * m).trace();
      tightest = std::min(tightest, best - v);
      if (v > best + 1e-12) {
        c.expect(false, "instance " + std::to_string(t) + " beaten by " + fmt(v - best));
        break;
      }
    }
  }
  c.note("smallest margin " + fmt(tightest));
  return c.outcome();
}

// 9. Recovery of known patterns
Outcome recovery() {
  Checks c;
  SynthConfig sc;
  sc.n_cells = 32;
  sc.channels = 3;
  sc.k_true = 4;
  sc.noise = 0.0;
  sc.seed = 1009;
  const SynthDataset ds = generate_synthetic(sc);
  LearnConfig lc;
  lc.k = 4;
  lc.outer_iters = 10;
  const MultiChannelModel m = train_multichannel(ds.cells, ds.channels, lc);
  double worst_err = 0.0;
  double worst_angle = 0.0;
  for (std::size_t ch = 0; ch < m.per_channel.size(); ++ch) {
    const ChannelModel& pc = m.per_channel[ch];
    const double err = pc.report.records.back().mean_relative_error;
    worst_err = std::max(worst_err, err);
    c.expect(err <= 0.01, ds.channels[ch].name + " mean relative error " + fmt(err));
    c.expect(pc.report.records.size() <= 10, ds.channels[ch].name + " used more than 10 iterations");
    const Eigen::VectorXd ang = principal_angles(pc.dictionary.matrix(), ds.templates[ch]);
    worst_angle = std::max(worst_angle, ang.maxCoeff());
    c.expect(ang.maxCoeff() <= 1e-3, ds.channels[ch].name + " principal angle " + fmt(ang.maxCoeff()));
  }
  c.note("worst mean error " + fmt(worst_err) + ", worst angle " + fmt(worst_angle) + " rad");
  return c.outcome();
}

// 10. Bit-determinism of the whole pipeline
void pipeline_run(const fs::path& root, const fs::path& raw, std::size_t threads) {
  RunConfig cfg;
  cfg.dataset = (root / "pre" / "manifest.json").string();
  cfg.threads = threads;
  cfg.learn.k = 4;
  cfg.learn.outer_iters = 10;
  cfg.cluster.n_perm = 200;
  cfg.cluster.n_boot = 100;
  cmd_preprocess(raw, root / "pre", cfg);
  cmd_train(cfg, root / "run");
  cmd_describe(cfg, root / "run" / "model", root / "run");
  cmd_validate(cfg, root / "run" / "descriptors", root / "run");
}

Outcome determinism() {
  Checks c;
  const fs::path dir = testutil::fresh_dir("celldict_acceptance_determinism");
  SynthConfig sc;
  sc.n_cells = 32;
  sc.channels = 3;
  sc.noise = 0.01;
  sc.frame = 48;
  sc.seed = 1010;
  cmd_synth(sc, dir / "synth");
  pipeline_run(dir / "a", dir / "synth" / "raw", 1);
  pipeline_run(dir / "b", dir / "synth" / "raw", 1);
  pipeline_run(dir / "c", dir / "synth" / "raw", 8);
  for (const char* other : {"b", "c"}) {
    const auto diffs = testutil::diff_trees(dir / "a", dir / other);
    c.expect(diffs.empty(), std::string("run ") + other + " differs: " + (diffs.empty() ? "" : diffs.front()));
  }
  fs::remove_all(dir);
  c.note("3 runs, threads 1/1/8");
  return c.outcome();
}

// 11. Descriptor algebra
Outcome descriptor_algebra() {
  Checks c;
  testutil::Rng rng(1011);
  const std::size_t n = 16;
  const std::size_t k = 5;
  const std::size_t channels = 3;
  std::vector<UnitaryDictionary> dicts;
  std::vector<CodeVector> codes;
  CellRecord cell{"cell", {}};
  for (std::size_t ch = 0; ch < channels; ++ch) {
    dicts.emplace_back(testutil::random_orthonormal(n, k, rng));
    codes.push_back(testutil::gaussian_matrix(k, 1, rng).col(0));
    cell.channels.push_back(testutil::random_image(4, 4, rng));
  }
  const UnifiedDescriptor d = build_descriptor(codes, dicts, cell);
  bool roundtrip = true;
  for (std::size_t ch = 0; ch < channels; ++ch) {
    for (std::size_t a = 0; a < k; ++a) {
      const auto i = static_cast<Eigen::Index>(a);
      const auto j = static_cast<Eigen::Index>(ch);
      roundtrip = roundtrip && d.phi(j * static_cast<Eigen::Index>(k) + i) == d.Phi(i, j) &&
                  d.Phi(i, j) == codes[ch](i);
    }
  }
  c.expect(roundtrip, "phi/Phi layout");
  const double wsum = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
  c.expect(std::abs(wsum - 1.0) <= 1e-12, "weights sum to " + fmt(wsum));

  // Hand cases: psi_k is the norm of atom k's codes across channels.
  {
    const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(4, 2);
    std::vector<UnitaryDictionary> two{UnitaryDictionary(e), UnitaryDictionary(e)};
    CellRecord unit{"u", {Image(2, 2, 1.0), Image(2, 2, 1.0)}};
    const auto psi_of = [&](Eigen::Vector2d a, Eigen::Vector2d b) {
      return build_descriptor(std::vector<CodeVector>{a, b}, two, unit).psi;
    };
    const Eigen::VectorXd p1 = psi_of({3.0, 0.0}, {4.0, 0.0});
    c.expect(p1(0) == 5.0 && p1(1) == 0.0, "psi(3,4) = " + fmt(p1(0)));
    const Eigen::VectorXd p2 = psi_of({5.0, 8.0}, {12.0, 6.0});
    c.expect(p2(0) == 13.0 && p2(1) == 10.0, "psi(5,12)/(8,6)");
    const Eigen::VectorXd p3 = psi_of({0.0, -1.0}, {0.0, 0.0});
    c.expect(p3(0) == 0.0 && p3(1) == 1.0, "psi(0,0)/(-1,0)");
  }

  // One channel: the unified image is that channel's reconstruction.
  {
    const UnifiedDescriptor one =
        build_descriptor(std::vector<CodeVector>{codes[0]}, std::vector<UnitaryDictionary>{dicts[0]},
                         CellRecord{"one", {cell.channels[0]}});
    const Image recon = dicts[0].synthesize(codes[0], 4, 4);
    c.expect(one.unified == recon, "single-channel unified image differs from reconstruction");
    c.expect(one.weights.size() == 1 && one.weights[0] == 1.0, "single-channel weight");
  }
  return c.outcome();
}

// 12. Clustering oracles
Eigen::MatrixXd blobs(std::size_t per, std::size_t dim, double gap, testutil::Rng& rng) {
  std::normal_distribution<double> g(0.0, 0.1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(2 * per), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
    x(i, i < static_cast<Eigen::Index>(per) ? 1 : 0) += gap;
  }
  return x;
}

Outcome clustering_oracles() {
  Checks c;
  testutil::Rng rng(1012);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> a(20);
    std::vector<int> b(20);
    for (auto& v : a) v = lab(rng);
    for (auto& v : b) v = lab(rng);
    c.expect(std::abs(ari(a, b) - oracle::ari_pairs(a, b)) <= 1e-12, "ARI vs pair counts");
    c.expect(std::abs(nmi(a, b) - oracle::nmi_direct(a, b)) <= 1e-12, "NMI vs entropies");
  }
  const std::vector<int> p{0, 0, 0, 1, 1, 1};
  const std::vector<int> q{0, 0, 1, 1, 2, 2};
  c.expect(std::abs(ari(p, q) - oracle::ari_pairs(p, q)) <= 1e-12, "ARI hand case");
  c.expect(std::abs(nmi(p, q) - oracle::nmi_direct(p, q)) <= 1e-12, "NMI hand case");

  for (std::size_t n = 4; n <= 12; ++n) {
    const Eigen::MatrixXd x = blobs(n / 2, 2, 1.0 + 0.1 * static_cast<double>(n), rng);
    const KMeansResult km = kmeans(x, 2, 7, 20);
    const oracle::Partition best = oracle::best_two_partition(x);
    c.expect(std::abs(km.inertia - best.wcss) <= 1e-9 * std::max(1.0, best.wcss),
             "k-means n=" + std::to_string(x.rows()) + " inertia " + fmt(km.inertia) + " vs " + fmt(best.wcss));
  }

  {
    const Eigen::MatrixXd x = blobs(15, 2, 10.0, rng);
    std::vector<int> labels(30, 0);
    std::fill(labels.begin() + 15, labels.end(), 1);
    const PermutationResult r = permutation_test(x, labels, ClusterConfig{}, 1000);
    c.expect(std::abs(r.ari_null.mean) <= 0.02, "null mean ARI " + fmt(r.ari_null.mean));
    c.note("null mean ARI " + fmt(r.ari_null.mean));
  }

  {
    ClusterConfig cfg;
    cfg.n_perm = 200;
    cfg.n_boot = 50;
    const Eigen::MatrixXd x = blobs(12, 12, 20.0, rng);
    std::vector<int> labels(24, 0);
    std::fill(labels.begin() + 12, labels.end(), 1);
    const ValidationReport r = run_validation(x, {3, 4}, labels, cfg);
    c.expect(r.ari == 1.0, "two-blob ARI " + fmt(r.ari));
    c.expect(r.permutation.p_ari <= 1.0 / 201.0 + 1e-15, "two-blob p " + fmt(r.permutation.p_ari));
  }
  return c.outcome();
}

// 13. Desk-scale check on exported BSCCM cells
Outcome bsccm_desk_check() {
  const char* env = std::getenv("CELLDICT_BSCCM_DIR");
  if (env == nullptr || !fs::exists(fs::path(env) / "manifest.json")) {
    return {Status::kSkip, "CELLDICT_BSCCM_DIR not set or has no manifest.json"};
  }
  Checks c;
  DatasetManifest m = read_manifest(fs::path(env) / "manifest.json");
  if (m.cells.size() > 100) m.cells.resize(100);
  const auto cells = load_cells(m);
  const auto channels = select_channels(m, {});
  LearnConfig lc;
  lc.k = 64;
  lc.outer_iters = 10;
  const MultiChannelModel model = train_multichannel(cells, channels, lc);
  double dpc = 0.0;
  double bf = 0.0;
  std::size_t n_dpc = 0;
  std::size_t n_bf = 0;
  for (std::size_t ch = 0; ch < channels.size(); ++ch) {
    double f = 0.0;
    for (double e : model.per_channel[ch].report.final_relative_errors) f += 100.0 * (1.0 - e);
    f /= static_cast<double>(cells.size());
    if (channels[ch].name.rfind("DPC", 0) == 0) {
      dpc += f;
      ++n_dpc;
    } else if (channels[ch].name == "Brightfield") {
      bf += f;
      ++n_bf;
    }
  }
  if (n_dpc == 0 || n_bf == 0) return {Status::kFail, "export lacks DPC or Brightfield channels"};
  dpc /= static_cast<double>(n_dpc);
  bf /= static_cast<double>(n_bf);
  c.expect(dpc >= 90.0, "DPC fidelity " + fmt(dpc));
  c.expect(bf >= 85.0, "Brightfield fidelity " + fmt(bf));
  c.expect(dpc > bf, "DPC does not exceed Brightfield");
  c.note("DPC " + fmt(dpc) + "%, Brightfield " + fmt(bf) + "%");
  return c.outcome();
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no limit
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "adjoint identity", 1.0, adjoint_identity},
      {2, "spectral bound", 5.0, spectral_bound},
      {3, "pdhg correctness", 60.0, pdhg_correctness},
      {4, "step-size gate", 0.0, step_gate},
      {5, "geometric decay", 30.0, geometric_decay},
      {6, "O(delta) stability", 60.0, delta_stability},
      {7, "unitarity", 0.0, unitarity},
      {8, "procrustes optimality", 30.0, procrustes_optimality},
      {9, "recovery", 300.0, recovery},
      {10, "bit-determinism", 0.0, determinism},
      {11, "descriptor algebra", 0.0, descriptor_algebra},
      {12, "clustering oracles", 120.0, clustering_oracles},
      {13, "bsccm desk check", 0.0, bsccm_desk_check},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Status::kPass && cr.budget_s > 0.0 && secs >= cr.budget_s) {
      o = {Status::kFail, "took " + fmt(secs) + " s, budget " + fmt(cr.budget_s) + " s"};
    }
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    if (o.status == Status::kFail) ++failed;
    std::cout << tag << " " << std::setw(2) << cr.id << " " << cr.name << " (" << std::fixed
              << std::setprecision(2) << secs << " s)" << std::defaultfloat;
    if (!o.detail.empty()) std::cout << ": " << o.detail;
    std::cout << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
