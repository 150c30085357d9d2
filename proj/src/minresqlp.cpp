#include "flatscan/minresqlp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace flatscan {

const char* to_string(KrylovSolution::StopReason reason) {
  switch (reason) {
    case KrylovSolution::StopReason::rtol_r: return "rtol_r";
    case KrylovSolution::StopReason::rtol_rH: return "rtol_rH";
    case KrylovSolution::StopReason::maxit: return "maxit";
    case KrylovSolution::StopReason::breakdown: return "breakdown";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(rtol > 0)) throw std::invalid_argument("SolverConfig: rtol must be > 0");
  if (maxit < 0) throw std::invalid_argument("SolverConfig: maxit must be >= 0");
  if (!(alpha0 > 0)) throw std::invalid_argument("SolverConfig: alpha0 must be > 0");
  if (!(beta > 0 && beta < 1)) {
    throw std::invalid_argument("SolverConfig: need 0 < beta < 1");
  }
  if (!(rho > 0 && rho < rho_unit && rho_unit < 1)) {
    throw std::invalid_argument("SolverConfig: need 0 < rho < rho_unit < 1");
  }
  if (max_backtracks < 0) {
    throw std::invalid_argument("SolverConfig: max_backtracks must be >= 0");
  }
  if (outer_iters < 0) {
    throw std::invalid_argument("SolverConfig: outer_iters must be >= 0");
  }
  if (grad_tol_sq < 0) {
    throw std::invalid_argument("SolverConfig: grad_tol_sq must be >= 0");
  }
  if (snapshot_every < 0) {
    throw std::invalid_argument("SolverConfig: snapshot_every must be >= 0");
  }
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct GivensReflection {
  double c, s, r;
};

// Stable symmetric orthogonal reflection [c s; s -c] with [a b]' -> [r 0]'.
GivensReflection sym_ortho(double a, double b) {
  if (b == 0.0) {
    if (a == 0.0) return {1.0, 0.0, 0.0};
    return {a > 0 ? 1.0 : -1.0, 0.0, std::abs(a)};
  }
  if (a == 0.0) return {0.0, b > 0 ? 1.0 : -1.0, std::abs(b)};
  if (std::abs(b) > std::abs(a)) {
    const double t = a / b;
    const double s = (b > 0 ? 1.0 : -1.0) / std::sqrt(1.0 + t * t);
    return {s * t, s, b / s};
  }
  const double t = b / a;
  const double c = (a > 0 ? 1.0 : -1.0) / std::sqrt(1.0 + t * t);
  return {c, c * t, a / c};
}

// known_fro >= 0: H is materialized and ||H||_F is exact.
// known_fro < 0: operator mode, the residual norms use the running Lanczos
// estimate (a lower bound on ||H||_F); r and r_H are clamped to [0, 1].
KrylovSolution solve_impl(const LinearOperator& apply, Eigen::Index n,
                          const ParamVector& g, const SolverConfig& cfg,
                          double known_fro) {
  cfg.validate();
  if (g.size() != n) throw std::invalid_argument("mrqlp_solve: size mismatch");
  const int maxit = cfg.maxit > 0 ? cfg.maxit : static_cast<int>(n);

  KrylovSolution sol;
  sol.hnorm_is_estimate = known_fro < 0;

  const ParamVector b = -g;
  const double beta1 = b.norm();
  const double gnorm = beta1;

  // Scalar Lanczos history, kept for the projected endgame solve.
  std::vector<double> alfa_hist, betan_hist;

  auto finalize = [&](const ParamVector& x, int iters) {
    sol.step = x;
    sol.iterations = iters;
    const ParamVector res = apply(x) + g;
    const double res_norm = res.norm();
    const double pnorm_x = x.norm();
    const double hnorm =
        known_fro >= 0 ? known_fro : std::max(sol.hnorm, 0.0);
    sol.hnorm = hnorm;
    if (res_norm == 0.0 || (pnorm_x == 0.0 && gnorm == 0.0)) {
      sol.rel_residual = 0.0;
    } else {
      const double denom = hnorm * pnorm_x + gnorm;
      sol.rel_residual = denom > 0 ? res_norm / denom : 1.0;
    }
    sol.rel_residual = std::clamp(sol.rel_residual, 0.0, 1.0);
    if (res_norm == 0.0) {
      sol.cokernel_residual = 0.0;
    } else {
      const double denom = hnorm * res_norm;
      sol.cokernel_residual =
          denom > 0 ? (apply(res)).norm() / denom : 0.0;
    }
    sol.cokernel_residual = std::clamp(sol.cokernel_residual, 0.0, 1.0);
    if (sol.rel_residual <= cfg.rtol) {
      sol.stop_reason = KrylovSolution::StopReason::rtol_r;
    } else if (sol.cokernel_residual <= cfg.rtol) {
      sol.stop_reason = KrylovSolution::StopReason::rtol_rH;
    } else if (iters >= maxit) {
      sol.stop_reason = KrylovSolution::StopReason::maxit;
    } else {
      sol.stop_reason = KrylovSolution::StopReason::breakdown;
    }
    return sol;
  };

  if (beta1 == 0.0) {
    sol.hnorm = known_fro >= 0 ? known_fro : 0.0;
    return finalize(ParamVector::Zero(n), 0);
  }

  // Lanczos state. With reorthogonalization on (the default at this
  // problem scale) every basis vector is kept and each new vector is
  // re-projected twice, which restores the exact-arithmetic saturation
  // behavior that minimum-norm solutions on singular systems rely on.
  ParamVector v = b / beta1;
  ParamVector v_prev = ParamVector::Zero(n);
  double beta = beta1;
  Eigen::MatrixXd basis;
  if (cfg.reorthogonalize) basis.resize(n, std::min<Eigen::Index>(maxit, n));
  int basis_count = 0;

  // Left reflections Q_k (MINRES QR of the tridiagonal).
  double cs = -1.0, sn = 0.0, dltan = 0.0, eplnn = 0.0;
  // Right reflections P (QLP factor), lower-tridiagonal L entries.
  double gama = 0.0, gamal = 0.0, gamal2 = 0.0;
  double eta = 0.0, etal = 0.0, etal2 = 0.0;
  double vepln = 0.0, veplnl = 0.0, veplnl2 = 0.0;
  double cr1 = -1.0, sr1 = 0.0, cr2 = -1.0, sr2 = 0.0;
  // Transformed rhs t = Q beta1 e1 and solution coefficients u = L^-1 t.
  double tau = 0.0, taul = 0.0, taul2 = 0.0;
  double phi = beta1;
  double u = 0.0, ul = 0.0, ul2 = 0.0, ul3 = 0.0, ul4 = 0.0;
  double xnorm = 0.0, xl2norm = 0.0;

  ParamVector w = ParamVector::Zero(n), wl = ParamVector::Zero(n),
              wl2 = ParamVector::Zero(n);
  ParamVector x = ParamVector::Zero(n), xl2 = ParamVector::Zero(n);

  double anorm_est = 0.0;
  double rnorm_est = beta1;

  for (int k = 1; k <= maxit; ++k) {
    // Lanczos step: betan v_next = A v - alfa v - beta v_prev.
    if (cfg.reorthogonalize && basis_count < basis.cols()) {
      basis.col(basis_count++) = v;
    }
    ParamVector pk = apply(v);
    const double alfa = v.dot(pk);
    pk -= alfa * v;
    if (k > 1) pk -= beta * v_prev;
    if (cfg.reorthogonalize && basis_count > 0) {
      const auto span = basis.leftCols(basis_count);
      pk -= span * (span.transpose() * pk);
      pk -= span * (span.transpose() * pk);
    }
    const double betan = pk.norm();
    if (!std::isfinite(alfa) || !std::isfinite(betan)) {
      throw std::runtime_error(
          "mrqlp_solve: non-finite value in operator product at iteration " +
          std::to_string(k));
    }
    alfa_hist.push_back(alfa);
    betan_hist.push_back(betan);
    const double pnorm =
        std::sqrt((k > 1 ? beta * beta : 0.0) + alfa * alfa + betan * betan);
    anorm_est = std::max(anorm_est, pnorm);
    sol.hnorm = anorm_est;
    const double hnorm_scale =
        known_fro >= 0 ? known_fro : anorm_est;
    const double breakdown_tol = 64.0 * kEps * hnorm_scale;
    const double sing_tol = 50.0 * double(n) * kEps * hnorm_scale;

    if (k == 1 && betan <= breakdown_tol) {
      // A v1 = alfa v1 (+ noise): b is an eigenvector, or lies in the
      // kernel when alfa is itself at noise level.
      if (std::abs(alfa) <= sing_tol) {
        return finalize(ParamVector::Zero(n), 1);
      }
      return finalize(ParamVector(b / alfa), 1);
    }

    // Previous left reflection applied to column k of the tridiagonal.
    const double dbar = dltan;
    const double dlta_pre = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    eplnn = sn * betan;
    dltan = -cs * betan;
    const double rootl = std::hypot(gbar, dltan);  // for lagged r_H estimate
    double dlta = dlta_pre;

    // Current left reflection annihilating betan.
    gamal2 = gamal;
    gamal = gama;
    const GivensReflection q = sym_ortho(gbar, betan);
    cs = q.c;
    sn = q.s;
    gama = q.r;
    taul2 = taul;
    taul = tau;
    tau = cs * phi;
    phi = sn * phi;

    // Previous right reflection P_{k-2,k}.
    if (k > 2) {
      veplnl2 = veplnl;
      etal2 = etal;
      etal = eta;
      const double dlta_tmp = sr2 * vepln - cr2 * dlta;
      veplnl = cr2 * vepln + sr2 * dlta;
      dlta = dlta_tmp;
      eta = sr2 * gama;
      gama = -cr2 * gama;
    }
    // Current right reflection P_{k-1,k}.
    if (k > 1) {
      const GivensReflection p1 = sym_ortho(gamal, dlta);
      cr1 = p1.c;
      sr1 = p1.s;
      gamal = p1.r;
      vepln = sr1 * gama;
      gama = -cr1 * gama;
    }

    // Solution coefficients: u_j estimates refined as rows of L finalize.
    ul4 = ul3;
    ul3 = ul2;
    if (k > 2) {
      ul2 = std::abs(gamal2) > sing_tol
                ? (taul2 - etal2 * ul4 - veplnl2 * ul3) / gamal2
                : 0.0;
    }
    if (k > 1) {
      ul = std::abs(gamal) > sing_tol
               ? (taul - etal * ul3 - veplnl * ul2) / gamal
               : 0.0;
    }
    const double xnorm_tmp = std::sqrt(xl2norm * xl2norm + ul2 * ul2 + ul * ul);
    // A vanishing diagonal of L marks the unreachable (near-kernel) part of
    // the system: zero that solution component so the iterate stays the
    // minimum-norm candidate. Not a stopping condition on its own; the
    // residual tolerances decide below.
    bool singular = false;
    const double xnorm_cap =
        1e6 * (beta1 / std::max(hnorm_scale, 1e-300) + 1.0);
    if (std::abs(gama) > sing_tol) {
      u = (tau - eta * ul2 - vepln * ul) / gama;
      if (std::hypot(xnorm_tmp, u) > xnorm_cap) {
        u = 0.0;
        singular = true;
      }
    } else {
      u = 0.0;
      singular = true;
    }
    xl2norm = std::sqrt(xl2norm * xl2norm + ul2 * ul2);
    xnorm = std::sqrt(xl2norm * xl2norm + ul * ul + u * u);

    // Orthonormal direction updates W = V P and the solution itself.
    if (k == 1) {
      wl2 = wl;
      wl = v * sr1;
      w = -v * cr1;
    } else if (k == 2) {
      wl2 = wl;
      const ParamVector wl_new = w * cr1 + v * sr1;
      w = w * sr1 - v * cr1;
      wl = wl_new;
    } else {
      wl2 = wl;
      const ParamVector wk1 = wl2 * sr2 - v * cr2;  // column k after P_{k-2,k}
      wl2 = wl2 * cr2 + v * sr2;                    // column k-2, final
      const ParamVector wl_new = w * cr1 + wk1 * sr1;
      w = w * sr1 - wk1 * cr1;
      wl = wl_new;
    }
    xl2 += wl2 * ul2;
    x = xl2 + wl * ul + w * u;

    // Next right reflection P_{k-1,k+1}.
    const GivensReflection p2 = sym_ortho(gamal, eplnn);
    cr2 = p2.c;
    sr2 = p2.s;
    gamal = p2.r;

    anorm_est = std::max({anorm_est, std::abs(gama), std::abs(gamal)});
    sol.hnorm = anorm_est;
    const double hnorm_now = known_fro >= 0 ? known_fro : anorm_est;
    rnorm_est = singular ? std::hypot(phi, tau) : phi;
    const double relres_r =
        rnorm_est / (hnorm_now * xnorm + beta1);
    const double relres_rh_lagged =
        rootl / std::max(hnorm_now, 1e-300);

    const bool stop = betan <= breakdown_tol || relres_r <= cfg.rtol ||
                      relres_rh_lagged <= cfg.rtol || k == maxit;
    if (stop) return finalize(x, k);

    v_prev = v;
    v = pk / betan;
    beta = betan;
  }
  return finalize(x, maxit);
}

}  // namespace

KrylovSolution mrqlp_solve(const DenseSymMatrix& h, const ParamVector& g,
                           const SolverConfig& cfg) {
  const Eigen::MatrixXd& m = h.matrix();
  return solve_impl([&m](const ParamVector& v) { return ParamVector(m * v); },
                    h.size(), g, cfg, frobenius_norm(h));
}

KrylovSolution mrqlp_solve(const LinearOperator& h, Eigen::Index n,
                           const ParamVector& g, const SolverConfig& cfg) {
  return solve_impl(h, n, g, cfg, -1.0);
}

}  // namespace flatscan
