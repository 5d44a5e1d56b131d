#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <vector>

#include "celldict/image.hpp"

namespace celldict {

/// Parameters of the TV + non-negativity denoising solver.
///
/// The constructor rejects step sizes with tau * sigma * 8 >= 1; since the
/// squared norm of the forward-difference gradient never exceeds 8 this
/// guarantees tau * sigma * |grad|^2 < 1 on every grid.
class PdhgParams {
 public:
  static constexpr double kGradNormSqBound = 8.0;

  /// Defaults: tau = sigma = 1/4, theta = 1, lambda_tv = 0.05, 700
  /// iterations, tolerance 1e-7.
  PdhgParams();
  PdhgParams(double tau, double sigma, double theta, double lambda_tv, std::size_t max_iters,
             double tol_inner);

  double tau() const noexcept { return tau_; }
  double sigma() const noexcept { return sigma_; }
  double theta() const noexcept { return theta_; }
  double lambda_tv() const noexcept { return lambda_tv_; }
  std::size_t max_iters() const noexcept { return max_iters_; }
  double tol_inner() const noexcept { return tol_inner_; }

  PdhgParams with_lambda(double lambda_tv) const;
  PdhgParams with_max_iters(std::size_t max_iters) const;
  PdhgParams with_tolerance(double tol_inner) const;

  friend bool operator==(const PdhgParams&, const PdhgParams&) = default;

 private:
  double tau_;
  double sigma_;
  double theta_;
  double lambda_tv_;
  std::size_t max_iters_;
  double tol_inner_;
};

/// Iterate of the solver after a completed primal update.
struct PdhgState {
  Image y;
  Image y_prev;
  GradientField q;
  std::size_t iter = 0;
  double last_primal_change = 0.0;
  double last_dualarg_change = 0.0;
  double fixed_point_residual = 0.0;
};

struct ResidualRecord {
  double primal_change = 0.0;   // |y+ - y| / max(1, |y|)
  double dualarg_change = 0.0;  // |grad y+ - grad y| / max(1, |grad y|)
  double fixed_point_residual = 0.0;
};

struct PdhgReport {
  std::size_t iterations_used = 0;
  bool converged = false;
  std::vector<ResidualRecord> residual_history;
  double final_energy = 0.0;
  double final_step_norm = 0.0;  // |y^N - y^{N-1}|, unnormalized
};

struct PdhgResult {
  Image y;
  GradientField q;
  PdhgReport report;
};

/// Called after every iteration with the freshly updated state.
using PdhgObserver = std::function<void(const PdhgState&)>;

/// Minimizes 1/2 |y - datum|^2 + lambda_tv * TV(y) subject to y >= 0.
///
/// Starts from y = datum, q = 0 with y_prev = y. Each iteration extrapolates
/// ybar = y + theta (y - y_prev), takes a projected dual ascent step on q with
/// ybar and then the primal prox step. Stops once both relative changes drop
/// below tol_inner, or after max_iters. Throws NumericalDivergence on
/// non-finite iterates.
PdhgResult solve(const Image& datum, const PdhgParams& params, const PdhgObserver& observer = {});

/// 1/2 |y - datum|^2 + lambda_tv * TV(y), or +infinity if any y(p) < 0.
double energy(const Image& y, const Image& datum, double lambda_tv);

/// Distance between the state's primal iterate and the primal prox map
/// applied at that iterate with the current dual variable,
///   |y - P+((y - tau K^T q + tau datum) / (1 + tau))| / max(1, |y|).
/// Zero exactly at a saddle point of the solver.
double fixed_point_residual(const PdhgState& state, const Image& datum, const PdhgParams& params);

/// Observer that appends "iter,primal_change,dualarg_change,fixed_point_residual,energy"
/// rows to `out`. The header row is written by write_trace_header().
PdhgObserver csv_trace(std::ostream& out, const Image& datum, double lambda_tv);
void write_trace_header(std::ostream& out);

}  // namespace celldict
