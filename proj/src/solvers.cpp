#include "flatscan/solvers.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "flatscan/diagnostics.hpp"

namespace flatscan {

namespace {

constexpr int kStallLimit = 25;
constexpr double kDivergenceGuard = 1e12;

void push_snapshot(IterateTrace& trace, int iter, const ParamVector& theta,
                   double loss) {
  if (!trace.snapshots.empty() && trace.snapshots.back().iter == iter) return;
  trace.snapshots.push_back({iter, theta, loss});
}

// Shared outer loop: the step policy maps (theta, gradient) to a proposed
// direction plus the diagnostics to record for the iteration.
struct StepProposal {
  ParamVector p;
  double r = 0.0;
  double r_h = 0.0;
  int krylov_iters = 0;
  double dirderiv = 0.0;  // d/dalpha merit(theta + alpha p) at 0
};

using StepPolicy =
    std::function<StepProposal(const ParamVector&, const ParamVector&)>;

IterateTrace run_merit_newton(const ScalarField& field,
                              const ParamVector& theta0,
                              const SolverConfig& cfg,
                              const StepPolicy& propose) {
  cfg.validate();
  if (theta0.size() != field.dim()) {
    throw std::invalid_argument("solver: theta0 dimension mismatch");
  }
  IterateTrace trace;
  ParamVector theta = theta0;
  ParamVector grad = field.gradient(theta);
  double loss = field.value(theta);
  double sq = grad.squaredNorm();
  trace.rows.push_back({loss, sq, 0.0, 0.0, 0.0, 0});
  push_snapshot(trace, 0, theta, loss);
  trace.max_flat_theta = theta;
  trace.max_flat_iter = 0;
  trace.max_r = 0.0;
  trace.termination = IterateTrace::Termination::max_iters;

  const MeritFn merit = [&field](const ParamVector& t) {
    return field.gradient(t).squaredNorm();
  };

  int consecutive_failures = 0;
  for (int t = 1; t <= cfg.outer_iters; ++t) {
    const StepProposal prop = propose(theta, grad);
    const double alpha =
        line_search(merit, prop.dirderiv, theta, prop.p, cfg);
    if (prop.r >= trace.max_r) {
      trace.max_r = prop.r;
      trace.max_flat_theta = theta;  // flatness belongs to the solve point
      trace.max_flat_iter = t - 1;
    }
    const ParamVector theta_new = theta + alpha * prop.p;
    const bool moved = theta_new != theta;
    theta = theta_new;
    grad = field.gradient(theta);
    loss = field.value(theta);
    sq = grad.squaredNorm();
    trace.rows.push_back({loss, sq, prop.r, prop.r_h, alpha, prop.krylov_iters});
    if (cfg.snapshot_every > 0 && t % cfg.snapshot_every == 0) {
      push_snapshot(trace, t, theta, loss);
    }
    if (!std::isfinite(loss) || !std::isfinite(sq)) {
      trace.termination = IterateTrace::Termination::diverged;
      break;
    }
    if (alpha == 0.0) {
      if (++consecutive_failures >= kStallLimit) {
        trace.termination = IterateTrace::Termination::stalled;
        break;
      }
      continue;
    }
    consecutive_failures = 0;
    if (!moved) {
      trace.termination = IterateTrace::Termination::fixed_point;
      break;
    }
    if (cfg.grad_tol_sq > 0 && sq <= cfg.grad_tol_sq) {
      trace.termination = IterateTrace::Termination::converged;
      break;
    }
  }
  trace.terminal_theta = theta;
  push_snapshot(trace, static_cast<int>(trace.rows.size()) - 1, theta, loss);
  return trace;
}

}  // namespace

const char* to_string(IterateTrace::Termination t) {
  switch (t) {
    case IterateTrace::Termination::max_iters: return "max_iters";
    case IterateTrace::Termination::converged: return "converged";
    case IterateTrace::Termination::fixed_point: return "fixed_point";
    case IterateTrace::Termination::stalled: return "stalled";
    case IterateTrace::Termination::diverged: return "diverged";
  }
  return "unknown";
}

double line_search(const MeritFn& merit, double merit_dirderiv,
                   const ParamVector& theta, const ParamVector& p,
                   const SolverConfig& cfg) {
  if (p.isZero(0.0)) return 1.0;
  const double m0 = merit(theta);
  const bool descent = merit_dirderiv < 0.0;

  // Unit step first, against the stricter relaxation.
  {
    const double m1 = merit(theta + p);
    const bool ok = descent ? m1 <= m0 + cfg.rho_unit * merit_dirderiv
                            : m1 < m0;
    if (ok) return 1.0;
  }
  double alpha = cfg.alpha0;
  for (int k = 0; k <= cfg.max_backtracks; ++k, alpha *= cfg.beta) {
    const double m = merit(theta + alpha * p);
    const bool ok = descent ? m <= m0 + cfg.rho * alpha * merit_dirderiv
                            : m < m0;
    if (ok) return alpha;
  }
  return 0.0;
}

IterateTrace newton_mr(const ScalarField& field, const ParamVector& theta0,
                       const SolverConfig& cfg) {
  const StepPolicy policy = [&field, &cfg](const ParamVector& theta,
                                           const ParamVector& grad) {
    StepProposal prop;
    ParamVector hg;
    KrylovSolution sol;
    if (cfg.operator_mode) {
      const LinearOperator op = [&field, &theta](const ParamVector& v) {
        return field.hvp(theta, v);
      };
      sol = mrqlp_solve(op, field.dim(), grad, cfg);
      hg = field.hvp(theta, grad);
    } else {
      const DenseSymMatrix h = field.hessian(theta);
      sol = mrqlp_solve(h, grad, cfg);
      hg = h.apply(grad);
    }
    prop.p = sol.step;
    prop.r = sol.rel_residual;
    prop.r_h = sol.cokernel_residual;
    prop.krylov_iters = sol.iterations;
    prop.dirderiv = 2.0 * hg.dot(sol.step);
    return prop;
  };
  return run_merit_newton(field, theta0, cfg, policy);
}

IterateTrace damped_newton(const ScalarField& field, const ParamVector& theta0,
                           double damping, const SolverConfig& cfg) {
  if (damping < 0) {
    throw std::invalid_argument("damped_newton: damping must be >= 0");
  }
  const StepPolicy policy = [&field, damping](const ParamVector& theta,
                                              const ParamVector& grad) {
    StepProposal prop;
    const DenseSymMatrix h = field.hessian(theta);
    Eigen::MatrixXd damped = h.matrix();
    damped.diagonal().array() += damping;
    ParamVector p;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
    if (ldlt.info() == Eigen::Success) p = ldlt.solve(-grad);
    if (p.size() == 0 || !p.allFinite()) {
      p = pinv_solve(DenseSymMatrix(damped), -grad);
    }
    prop.p = p;
    prop.r = relative_residual(h, p, grad);
    prop.r_h = cokernel_residual(h, p, grad);
    prop.krylov_iters = 0;
    prop.dirderiv = 2.0 * (h.apply(grad)).dot(p);
    return prop;
  };
  return run_merit_newton(field, theta0, cfg, policy);
}

IterateTrace gradient_norm_min(const ScalarField& field,
                               const ParamVector& theta0, double lr,
                               int iters) {
  if (!(lr > 0)) throw std::invalid_argument("gradient_norm_min: lr must be > 0");
  if (theta0.size() != field.dim()) {
    throw std::invalid_argument("gradient_norm_min: theta0 dimension mismatch");
  }
  IterateTrace trace;
  ParamVector theta = theta0;
  ParamVector grad = field.gradient(theta);
  double loss = field.value(theta);
  trace.rows.push_back({loss, grad.squaredNorm(), 0.0, 0.0, 0.0, 0});
  push_snapshot(trace, 0, theta, loss);
  trace.max_flat_theta = theta;
  trace.termination = IterateTrace::Termination::max_iters;
  for (int t = 1; t <= iters; ++t) {
    const ParamVector merit_grad = field.hvp(theta, grad);
    const ParamVector update = lr * merit_grad;
    const bool zero_update = update.isZero(0.0) || (theta - update) == theta;
    theta -= update;
    grad = field.gradient(theta);
    loss = field.value(theta);
    const double sq = grad.squaredNorm();
    trace.rows.push_back({loss, sq, 0.0, 0.0, zero_update ? 0.0 : lr, 0});
    if (zero_update) {
      trace.termination = IterateTrace::Termination::fixed_point;
      break;
    }
    if (!std::isfinite(sq) || 0.5 * sq > kDivergenceGuard) {
      trace.termination = IterateTrace::Termination::diverged;
      break;
    }
  }
  trace.terminal_theta = theta;
  push_snapshot(trace, static_cast<int>(trace.rows.size()) - 1, theta, loss);
  return trace;
}

IterateTrace train_gd_momentum(const ScalarField& field,
                               const ParamVector& theta0, double lr,
                               double momentum, int epochs,
                               int snapshot_every) {
  if (!(lr > 0)) throw std::invalid_argument("train_gd_momentum: lr must be > 0");
  if (momentum < 0 || momentum >= 1) {
    throw std::invalid_argument("train_gd_momentum: need 0 <= momentum < 1");
  }
  if (theta0.size() != field.dim()) {
    throw std::invalid_argument("train_gd_momentum: theta0 dimension mismatch");
  }
  IterateTrace trace;
  ParamVector theta = theta0;
  ParamVector velocity = ParamVector::Zero(theta.size());
  ParamVector grad = field.gradient(theta);
  double loss = field.value(theta);
  trace.rows.push_back({loss, grad.squaredNorm(), 0.0, 0.0, 0.0, 0});
  push_snapshot(trace, 0, theta, loss);
  trace.max_flat_theta = theta;
  trace.termination = IterateTrace::Termination::max_iters;
  for (int t = 1; t <= epochs; ++t) {
    velocity = momentum * velocity - lr * grad;
    theta += velocity;
    grad = field.gradient(theta);
    loss = field.value(theta);
    trace.rows.push_back({loss, grad.squaredNorm(), 0.0, 0.0, lr, 0});
    if (snapshot_every > 0 && t % snapshot_every == 0) {
      push_snapshot(trace, t, theta, loss);
    }
    if (!std::isfinite(loss) || loss > kDivergenceGuard) {
      trace.termination = IterateTrace::Termination::diverged;
      break;
    }
  }
  trace.terminal_theta = theta;
  push_snapshot(trace, static_cast<int>(trace.rows.size()) - 1, theta, loss);
  return trace;
}

}  // namespace flatscan
