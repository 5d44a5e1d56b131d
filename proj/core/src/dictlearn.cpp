#include "celldict/dictlearn.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "celldict/errors.hpp"
#include "celldict/imgops.hpp"
#include "celldict/parallel.hpp"

namespace celldict {

UnitaryDictionary::UnitaryDictionary(Eigen::MatrixXd atoms) : atoms_(std::move(atoms)) {
  if (atoms_.cols() == 0 || atoms_.rows() == 0) {
    throw std::invalid_argument("dictionary must have at least one atom");
  }
  if (atoms_.cols() > atoms_.rows()) {
    throw std::invalid_argument("dictionary atom count exceeds signal dimension");
  }
  const double defect = orthonormality_defect();
  if (!(defect <= kUnitarityTolerance)) {
    std::ostringstream msg;
    msg << "dictionary columns are not orthonormal (|D^T D - I|_F = " << defect << ")";
    throw std::invalid_argument(msg.str());
  }
}

double UnitaryDictionary::orthonormality_defect() const {
  const Eigen::Index k = atoms_.cols();
  const Eigen::MatrixXd gram = atoms_.transpose() * atoms_;
  return (gram - Eigen::MatrixXd::Identity(k, k)).norm();
}

Eigen::VectorXd UnitaryDictionary::analyze(std::span<const double> y) const {
  if (y.size() != signal_dim()) throw std::invalid_argument("analyze: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
  return atoms_.transpose() * v;
}

Image UnitaryDictionary::synthesize(const Eigen::VectorXd& codes, std::size_t height,
                                    std::size_t width) const {
  if (static_cast<std::size_t>(codes.size()) != atom_count()) {
    throw std::invalid_argument("synthesize: code length mismatch");
  }
  if (height * width != signal_dim()) throw std::invalid_argument("synthesize: shape mismatch");
  const Eigen::VectorXd recon = atoms_ * codes;
  return Image(height, width, std::vector<double>(recon.data(), recon.data() + recon.size()));
}

void LearnConfig::validate() const {
  if (k == 0) throw ConfigError("k must be >= 1");
  if (outer_iters == 0) throw ConfigError("outer_iters must be >= 1");
  if (!(lambda0 >= 0.0) || !(gamma >= 0.0)) throw ConfigError("lambda0 and gamma must be >= 0");
  if (!(floor > 0.0)) throw ConfigError("lambda floor must be > 0");
  if (!(floor <= lambda0)) throw ConfigError("lambda floor must not exceed lambda0");
  if (!(eps_dict > 0.0) || !(eps_obj > 0.0)) throw ConfigError("stopping tolerances must be > 0");
  if (patience == 0) throw ConfigError("patience must be >= 1");
}

double lambda_schedule(std::size_t t, const LearnConfig& cfg) {
  return std::max(cfg.floor, cfg.lambda0 / (1.0 + cfg.gamma * static_cast<double>(t)));
}

UnitaryDictionary init_dictionary(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k == 0 || n == 0) throw std::invalid_argument("init_dictionary: n and k must be >= 1");
  if (k > n) {
    throw std::invalid_argument("init_dictionary: k (" + std::to_string(k) +
                                ") exceeds signal dimension n (" + std::to_string(n) + ")");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  // Column-major fill order is part of the seeded contract.
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = gauss(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
  return UnitaryDictionary(std::move(q));
}

CodeVector backproject_codes(const UnitaryDictionary& dict, const Image& y) {
  return dict.analyze(y.values());
}

UnitaryDictionary procrustes_update(const Eigen::MatrixXd& data, const Eigen::MatrixXd& codes) {
  if (data.rows() == 0) throw std::invalid_argument("procrustes_update: no samples");
  if (data.rows() != codes.rows()) {
    throw std::invalid_argument("procrustes_update: data and codes have different sample counts");
  }
  if (codes.cols() > data.cols()) {
    throw std::invalid_argument("procrustes_update: more atoms than signal dimensions");
  }
  const Eigen::MatrixXd m = data.transpose() * codes;
  if (m.cwiseAbs().maxCoeff() == 0.0) {
    throw DataError("procrustes_update: cross-covariance X^T A is zero (codes vanished)");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 1e-12 * smax)) {
    std::ostringstream msg;
    msg << "procrustes_update: cross-covariance is rank deficient (sigma_min/sigma_max = "
        << smin / smax << "); the data span fewer than K = " << codes.cols() << " directions";
    throw DataError(msg.str());
  }
  Eigen::MatrixXd d = svd.matrixU() * svd.matrixV().transpose();
  return UnitaryDictionary(std::move(d));
}

double relative_error(const Image& x, const Image& recon) {
  if (!x.same_shape(recon)) throw std::invalid_argument("relative_error: shape mismatch");
  const double nx = norm2(x.values());
  if (nx == 0.0) throw DataError("relative_error: zero datum");
  return distance2(x.values(), recon.values()) / nx;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kDictChange:
      return "dict_change";
    case StopReason::kObjChange:
      return "obj_change";
    case StopReason::kMaxIters:
      return "max_iters";
  }
  return "max_iters";
}

StopReason stop_reason_from_string(const std::string& s) {
  if (s == "dict_change") return StopReason::kDictChange;
  if (s == "obj_change") return StopReason::kObjChange;
  if (s == "max_iters") return StopReason::kMaxIters;
  throw DataError("unknown stop reason '" + s + "'");
}

namespace {

struct SolvedSample {
  Image ystar;
  double step_norm = 0.0;
  bool converged = false;
  double tv = 0.0;
};

Eigen::MatrixXd stack_images(std::span<const Image> data) {
  const auto rows = static_cast<Eigen::Index>(data.size());
  const auto cols = static_cast<Eigen::Index>(data.front().size());
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index j = 0; j < rows; ++j) {
    const auto v = data[static_cast<std::size_t>(j)].values();
    for (Eigen::Index i = 0; i < cols; ++i) x(j, i) = v[static_cast<std::size_t>(i)];
  }
  return x;
}

}  // namespace

ChannelModel train_channel(std::span<const Image> data, const LearnConfig& cfg,
                           const TrainOptions& opts) {
  cfg.validate();
  if (data.empty()) throw DataError("train_channel: no training images");
  const std::size_t height = data.front().height();
  const std::size_t width = data.front().width();
  for (const auto& img : data) {
    if (img.height() != height || img.width() != width) {
      throw DataError("train_channel: training images differ in shape");
    }
  }
  const std::size_t n = height * width;
  const std::size_t samples = data.size();
  if (cfg.k > n) {
    throw ConfigError("k = " + std::to_string(cfg.k) + " exceeds signal dimension " +
                      std::to_string(n));
  }
  if (cfg.k > samples) {
    std::clog << "warning: k = " << cfg.k << " exceeds the sample count N = " << samples
              << "; the Procrustes update needs K <= N to be well posed\n";
  }

  TrainState state;
  if (opts.resume != nullptr) {
    state = *opts.resume;
    if (!state.dictionary || state.dictionary->signal_dim() != n ||
        state.dictionary->atom_count() != cfg.k) {
      throw DataError("train_channel: resume state does not match data/config");
    }
  } else {
    state.dictionary = init_dictionary(n, cfg.k, cfg.seed);
  }

  const Eigen::MatrixXd x = stack_images(data);
  std::vector<double> x_norms(samples);
  for (std::size_t j = 0; j < samples; ++j) x_norms[j] = norm2(data[j].values());

  double final_lambda =
      state.report.records.empty() ? lambda_schedule(0, cfg) : state.report.records.back().lambda_tv;
  std::size_t completed_this_call = 0;

  for (std::size_t t = state.next_iteration; !state.finished && t < cfg.outer_iters; ++t) {
    if (opts.stop_after && completed_this_call >= *opts.stop_after) break;
    const double lambda = lambda_schedule(t, cfg);
    const PdhgParams params = cfg.pdhg.with_lambda(lambda);
    final_lambda = lambda;

    std::vector<SolvedSample> solved(samples);
    const UnitaryDictionary& d_old = *state.dictionary;
    Eigen::MatrixXd codes(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(cfg.k));
    parallel_for(samples, opts.threads, [&](std::size_t j) {
      try {
        PdhgResult r = solve(data[j], params);
        solved[j].tv = tv_norm(r.y);
        solved[j].ystar = std::move(r.y);
        solved[j].step_norm = r.report.final_step_norm;
        solved[j].converged = r.report.converged;
      } catch (const NumericalDivergence& e) {
        throw NumericalDivergence("sample " + std::to_string(j) + ": " + e.what());
      }
      // Back-projection onto the current dictionary.
      codes.row(static_cast<Eigen::Index>(j)) = backproject_codes(d_old, solved[j].ystar).transpose();
    });

    UnitaryDictionary d_new = procrustes_update(x, codes);

    OuterRecord rec;
    rec.iteration = t;
    rec.lambda_tv = lambda;
    rec.dict_change = (d_new.matrix() - d_old.matrix()).norm();
    rec.dict_change_rel = rec.dict_change / std::max(1.0, d_old.matrix().norm());

    // Refresh codes against the updated dictionary.
    std::vector<double> rel_errors(samples);
    std::vector<double> fidelities(samples);
    state.codes.assign(samples, CodeVector());
    parallel_for(samples, opts.threads, [&](std::size_t j) {
      state.codes[j] = backproject_codes(d_new, solved[j].ystar);
      const Image recon = d_new.synthesize(state.codes[j], height, width);
      const double resid = distance2(data[j].values(), recon.values());
      fidelities[j] = 0.5 * resid * resid;
      rel_errors[j] = x_norms[j] > 0.0 ? resid / x_norms[j] : 0.0;
    });

    double fid_sum = 0.0;
    double tv_sum = 0.0;
    double res_sum = 0.0;
    double res_max = 0.0;
    double rel_sum = 0.0;
    double rel_max = 0.0;
    std::size_t converged = 0;
    for (std::size_t j = 0; j < samples; ++j) {
      fid_sum += fidelities[j];
      tv_sum += solved[j].tv;
      res_sum += solved[j].step_norm;
      res_max = std::max(res_max, solved[j].step_norm);
      converged += solved[j].converged ? 1 : 0;
      rel_sum += rel_errors[j];
      rel_max = std::max(rel_max, rel_errors[j]);
    }
    const auto nd = static_cast<double>(samples);
    rec.mean_fidelity = fid_sum / nd;
    rec.total_objective = rec.mean_fidelity + lambda * tv_sum / nd;
    rec.mean_inner_residual = res_sum / nd;
    rec.max_inner_residual = res_max;
    rec.inner_converged_fraction = static_cast<double>(converged) / nd;
    rec.mean_relative_error = rel_sum / nd;
    rec.max_relative_error = rel_max;

    // Outer stopping rule: either criterion, held for `patience` iterations.
    bool dict_ok = rec.dict_change_rel <= cfg.eps_dict;
    bool obj_ok = false;
    if (state.prev_fidelity) {
      const double prev = *state.prev_fidelity;
      obj_ok = std::abs(rec.mean_fidelity - prev) / (std::abs(prev) + 1e-12) <= cfg.eps_obj;
    }
    state.patience_count = (dict_ok || obj_ok) ? state.patience_count + 1 : 0;
    state.prev_fidelity = rec.mean_fidelity;
    state.dictionary = std::move(d_new);
    state.next_iteration = t + 1;
    state.report.records.push_back(rec);
    state.report.final_relative_errors = std::move(rel_errors);
    if (state.patience_count >= cfg.patience) {
      state.finished = true;
      state.report.stop_reason = dict_ok ? StopReason::kDictChange : StopReason::kObjChange;
    } else if (state.next_iteration >= cfg.outer_iters) {
      state.finished = true;
      state.report.stop_reason = StopReason::kMaxIters;
    }
    ++completed_this_call;
    if (opts.on_iteration) opts.on_iteration(state);
  }

  ChannelModel model{*state.dictionary, std::move(state.codes), std::move(state.report),
                     final_lambda, state.finished};
  return model;
}

}  // namespace celldict
