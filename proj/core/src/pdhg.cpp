#include "celldict/pdhg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "celldict/errors.hpp"
#include "celldict/imgops.hpp"
#include "celldict/prox.hpp"

namespace celldict {

PdhgParams::PdhgParams() : PdhgParams(0.25, 0.25, 1.0, 0.05, 700, 1e-7) {}

PdhgParams::PdhgParams(double tau, double sigma, double theta, double lambda_tv,
                       std::size_t max_iters, double tol_inner)
    : tau_(tau),
      sigma_(sigma),
      theta_(theta),
      lambda_tv_(lambda_tv),
      max_iters_(max_iters),
      tol_inner_(tol_inner) {
  if (!(tau > 0.0) || !(sigma > 0.0)) throw ConfigError("PDHG step sizes must be positive");
  if (!(tau * sigma * kGradNormSqBound < 1.0)) {
    std::ostringstream msg;
    msg << "PDHG step sizes violate tau*sigma < 1/8 (tau*sigma = " << tau * sigma << ")";
    throw ConfigError(msg.str());
  }
  if (!(theta >= 0.0 && theta <= 1.0)) throw ConfigError("PDHG theta must lie in [0, 1]");
  if (!(lambda_tv >= 0.0) || !std::isfinite(lambda_tv)) {
    throw ConfigError("lambda_tv must be finite and >= 0");
  }
  if (max_iters == 0) throw ConfigError("PDHG max_iters must be >= 1");
  if (!(tol_inner > 0.0)) throw ConfigError("PDHG tolerance must be > 0");
}

PdhgParams PdhgParams::with_lambda(double lambda_tv) const {
  return {tau_, sigma_, theta_, lambda_tv, max_iters_, tol_inner_};
}

PdhgParams PdhgParams::with_max_iters(std::size_t max_iters) const {
  return {tau_, sigma_, theta_, lambda_tv_, max_iters, tol_inner_};
}

PdhgParams PdhgParams::with_tolerance(double tol_inner) const {
  return {tau_, sigma_, theta_, lambda_tv_, max_iters_, tol_inner};
}

double energy(const Image& y, const Image& datum, double lambda_tv) {
  if (!y.same_shape(datum)) throw std::invalid_argument("energy: shape mismatch");
  for (double v : y.values()) {
    if (v < 0.0) return std::numeric_limits<double>::infinity();
  }
  const double d = distance2(y.values(), datum.values());
  return 0.5 * d * d + lambda_tv * tv_norm(y);
}

namespace {

// P+((base - tau * kt_q + tau * datum) / (1 + tau)) written into out.
void primal_prox(const Image& base, const Image& kt_q, const Image& datum, double tau,
                 Image& out) {
  const double denom = 1.0 + tau;
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = std::max((base[i] - tau * kt_q[i] + tau * datum[i]) / denom, 0.0);
  }
}

double residual_against(const Image& y, const Image& kt_q, const Image& datum, double tau) {
  const double denom = 1.0 + tau;
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double p = std::max((y[i] - tau * kt_q[i] + tau * datum[i]) / denom, 0.0);
    const double d = y[i] - p;
    s += d * d;
  }
  return std::sqrt(s) / std::max(1.0, norm2(y.values()));
}

[[noreturn]] void diverged(const PdhgParams& params, std::size_t iter) {
  std::ostringstream msg;
  msg << "PDHG produced non-finite values at iteration " << iter
      << " (tau*sigma = " << params.tau() * params.sigma()
      << ", requires tau*sigma*|grad|^2 < 1)";
  throw NumericalDivergence(msg.str());
}

}  // namespace

double fixed_point_residual(const PdhgState& state, const Image& datum, const PdhgParams& params) {
  if (!state.y.same_shape(datum)) throw std::invalid_argument("fixed_point_residual: shape mismatch");
  Image kt_q = gradient_adjoint(state.q);
  return residual_against(state.y, kt_q, datum, params.tau());
}

PdhgResult solve(const Image& datum, const PdhgParams& params, const PdhgObserver& observer) {
  if (datum.empty()) throw std::invalid_argument("pdhg::solve: empty datum");
  for (double v : datum.values()) {
    if (!std::isfinite(v)) throw DataError("pdhg::solve: datum contains non-finite values");
  }

  const std::size_t h = datum.height();
  const std::size_t w = datum.width();
  const double tau = params.tau();
  const double sigma = params.sigma();
  const double theta = params.theta();
  const double lambda = params.lambda_tv();

  PdhgState st;
  st.y = datum;
  st.y_prev = datum;
  st.q = GradientField(h, w);

  Image ybar(h, w);
  Image kt_q(h, w);
  Image y_next(h, w);
  GradientField k_ybar(h, w);
  GradientField k_y = gradient(st.y);
  GradientField k_next(h, w);

  PdhgReport report;
  report.residual_history.reserve(std::min<std::size_t>(params.max_iters(), 4096));

  for (std::size_t n = 0; n < params.max_iters(); ++n) {
    for (std::size_t i = 0; i < ybar.size(); ++i) {
      ybar[i] = st.y[i] + theta * (st.y[i] - st.y_prev[i]);
    }

    // Dual ascent and projection onto the lambda-ball; lambda = 0 pins q at 0.
    gradient_into(ybar, k_ybar);
    if (lambda > 0.0) {
      auto qx = st.q.dx_values();
      auto qy = st.q.dy_values();
      const auto gx = k_ybar.dx_values();
      const auto gy = k_ybar.dy_values();
      for (std::size_t i = 0; i < qx.size(); ++i) {
        qx[i] += sigma * gx[i];
        qy[i] += sigma * gy[i];
      }
      project_ball_inplace(st.q, BallRadius(lambda));
    }

    gradient_adjoint_into(st.q, kt_q);
    primal_prox(st.y, kt_q, datum, tau, y_next);
    gradient_into(y_next, k_next);

    const double step = distance2(y_next.values(), st.y.values());
    const double y_norm = norm2(st.y.values());
    const double k_step = distance2(k_next, k_y);
    const double k_norm = norm2(k_y);

    ResidualRecord rec;
    rec.primal_change = step / std::max(1.0, y_norm);
    rec.dualarg_change = k_step / std::max(1.0, k_norm);
    rec.fixed_point_residual = residual_against(y_next, kt_q, datum, tau);
    if (!std::isfinite(rec.primal_change) || !std::isfinite(rec.dualarg_change) ||
        !std::isfinite(rec.fixed_point_residual)) {
      diverged(params, n + 1);
    }

    std::swap(st.y_prev, st.y);
    std::swap(st.y, y_next);
    std::swap(k_y, k_next);
    st.iter = n + 1;
    st.last_primal_change = rec.primal_change;
    st.last_dualarg_change = rec.dualarg_change;
    st.fixed_point_residual = rec.fixed_point_residual;
    report.residual_history.push_back(rec);
    report.final_step_norm = step;

#ifndef NDEBUG
    for (double v : st.y.values()) assert(v >= 0.0);
    if (lambda > 0.0) {
      for (std::size_t i = 0; i < st.q.size(); ++i) {
        const double qx = st.q.dx_values()[i];
        const double qy = st.q.dy_values()[i];
        assert(std::sqrt(qx * qx + qy * qy) <= lambda * (1.0 + 1e-12));
      }
    }
#endif

    if (observer) observer(st);

    if (rec.primal_change <= params.tol_inner() && rec.dualarg_change <= params.tol_inner()) {
      report.converged = true;
      break;
    }
  }

  report.iterations_used = st.iter;
  report.final_energy = energy(st.y, datum, lambda);
  return PdhgResult{std::move(st.y), std::move(st.q), std::move(report)};
}

void write_trace_header(std::ostream& out) {
  out << "iter,primal_change,dualarg_change,fixed_point_residual,energy\n";
}

PdhgObserver csv_trace(std::ostream& out, const Image& datum, double lambda_tv) {
  return [&out, &datum, lambda_tv](const PdhgState& st) {
    const auto prec = out.precision(17);
    out << st.iter << ',' << st.last_primal_change << ',' << st.last_dualarg_change << ','
        << st.fixed_point_residual << ',' << energy(st.y, datum, lambda_tv) << '\n';
    out.precision(prec);
  };
}

}  // namespace celldict
