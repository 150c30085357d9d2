#pragma once

#include <functional>
#include <vector>

#include "flatscan/minresqlp.hpp"
#include "flatscan/scalar_field.hpp"

namespace flatscan {

/// One solver iteration. Row 0 describes the starting point; row t >= 1
/// records the state after step t together with the Krylov solve that
/// produced the step (its r, r_H and iteration count) and the accepted
/// step size (0 when the line search failed).
struct TraceRow {
  double loss = 0.0;
  double sq_grad_norm = 0.0;
  double r = 0.0;
  double r_h = 0.0;
  double step_size = 0.0;
  int krylov_iters = 0;
};

struct TraceSnapshot {
  int iter = 0;
  ParamVector theta;
  double loss = 0.0;
};

struct IterateTrace {
  std::vector<TraceRow> rows;  // rows.size() == completed iterations + 1
  std::vector<TraceSnapshot> snapshots;  // configured intervals + first/last
  ParamVector terminal_theta;
  ParamVector max_flat_theta;  // iterate whose Newton solve had maximal r
  int max_flat_iter = 0;
  double max_r = 0.0;

  enum class Termination {
    max_iters,    // outer iteration budget exhausted
    converged,    // squared gradient norm reached grad_tol_sq
    fixed_point,  // accepted step was exactly zero
    stalled,      // 25 consecutive failed line searches
    diverged      // merit or loss exceeded the divergence guard
  };
  Termination termination = Termination::max_iters;
};

const char* to_string(IterateTrace::Termination t);

using MeritFn = std::function<double(const ParamVector&)>;

/// Two-stage backtracking line search on the supplied merit. A unit step is
/// checked first against the stricter relaxation rho_unit; backtracking then
/// starts at alpha0 and shrinks by beta, accepting the first alpha with
///   merit(theta + alpha p) <= merit(theta) + rho * alpha * merit_dirderiv.
/// Returns 0 when every candidate fails, 1 by convention when p = 0. A
/// non-descent merit_dirderiv falls back to requiring strict improvement.
double line_search(const MeritFn& merit, double merit_dirderiv,
                   const ParamVector& theta, const ParamVector& p,
                   const SolverConfig& cfg);

/// Newton-MR: steps from MINRES-QLP solves of H p = -g, step sizes from
/// line_search on the squared gradient norm merit. The dense Hessian is
/// materialized per iterate unless cfg.operator_mode drives the solver with
/// Hessian-vector products only.
IterateTrace newton_mr(const ScalarField& field, const ParamVector& theta0,
                       const SolverConfig& cfg);

/// Newton with Tikhonov damping: solves (H + damping I) p = -g densely,
/// same line search and trace contract as newton_mr.
IterateTrace damped_newton(const ScalarField& field, const ParamVector& theta0,
                           double damping, const SolverConfig& cfg);

/// Gradient descent on the merit g(x) = 1/2 ||grad f||^2, whose gradient is
/// the Hessian-gradient product. Aborts with the diverged flag when the
/// merit exceeds 1e12.
IterateTrace gradient_norm_min(const ScalarField& field,
                               const ParamVector& theta0, double lr,
                               int iters);

/// Classical full-batch gradient descent with momentum; snapshots retained
/// every snapshot_every epochs (plus first and last) for loss-uniform
/// sampling downstream.
IterateTrace train_gd_momentum(const ScalarField& field,
                               const ParamVector& theta0, double lr,
                               double momentum, int epochs,
                               int snapshot_every);

}  // namespace flatscan
