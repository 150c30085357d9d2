#pragma once

#include <functional>

#include "flatscan/linalg.hpp"

namespace flatscan {

/// An inexact Newton step p ~ -H^+ g with the residual diagnostics used to
/// detect gradient-flatness:
///   r   = ||Hp + g|| / (||H|| ||p|| + ||g||)      (relative residual)
///   r_H = ||H(Hp + g)|| / (||H|| ||Hp + g||)      (co-kernel residual)
/// ||H|| is the true Frobenius norm when H is materialized; in operator-only
/// mode it is the Lanczos spectral-norm estimate, a lower bound on ||H||_F
/// (hnorm/hnorm_is_estimate record which convention produced the values).
struct KrylovSolution {
  ParamVector step;
  double rel_residual = 0.0;
  double cokernel_residual = 0.0;
  int iterations = 0;
  enum class StopReason { rtol_r, rtol_rH, maxit, breakdown };
  StopReason stop_reason = StopReason::rtol_r;
  double hnorm = 0.0;
  bool hnorm_is_estimate = false;
};

const char* to_string(KrylovSolution::StopReason reason);

/// Hyperparameters shared by the Krylov solver and the outer Newton loops.
struct SolverConfig {
  double rtol = 5e-4;       // Krylov residual tolerance (r or r_H)
  int maxit = 0;            // Krylov iteration cap; 0 means system dimension
  double alpha0 = 0.1;      // first backtracking step size
  double beta = 0.5;        // backtracking shrink factor
  double rho = 0.1;         // sufficient-decrease relaxation
  double rho_unit = 0.5;    // stricter relaxation for the unit-step check
  int max_backtracks = 50;
  int outer_iters = 100;
  double grad_tol_sq = 0.0; // outer stop on squared gradient norm; 0 disables
  bool operator_mode = false;  // drive the solver with hvp calls, no dense H
  int snapshot_every = 0;      // trace snapshot interval; 0 keeps first/last
  bool reorthogonalize = true; // keep Lanczos basis orthogonal (O(n^2) memory)

  void validate() const;
};

using LinearOperator = std::function<ParamVector(const ParamVector&)>;

/// MINRES-QLP solve of H p = -g for symmetric (possibly singular or
/// indefinite) H: p approximates the minimum-norm least-squares solution.
/// Iteration stops when r <= rtol, r_H <= rtol, maxit is reached, or the
/// Lanczos process breaks down; the returned r and r_H are recomputed from
/// the returned step. NaN in operator products aborts with a diagnostic.
KrylovSolution mrqlp_solve(const DenseSymMatrix& h, const ParamVector& g,
                           const SolverConfig& cfg);

/// Operator-only variant (n is the system dimension).
KrylovSolution mrqlp_solve(const LinearOperator& h, Eigen::Index n,
                           const ParamVector& g, const SolverConfig& cfg);

}  // namespace flatscan
