#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flatscan/linalg.hpp"
#include "flatscan/scalar_field.hpp"
#include "flatscan/solvers.hpp"

namespace flatscan {

/// Classification thresholds. Defaults follow the flatness criterion
/// r > 0.9 with r_H < 5e-4 and the critical-point cutoff on the squared
/// gradient norm; all overridable via config.
struct Cutoffs {
  double grad_sq = 1e-10;    // critical iff terminal sq_grad_norm below this
  double r = 0.9;            // gradient-flat needs r above this
  double r_h = 5e-4;         // ... and r_H below this
  double grad_filter = 1e-4; // loss-index tables drop rows above this
};

struct FlatnessReport {
  double r = 0.0;
  double r_h = 0.0;
  std::optional<double> rayleigh;  // undefined at zero gradient
  bool is_gradient_flat = false;
  Cutoffs thresholds;
};

/// Relative residual r(p) = ||Hp + g|| / (||H||_F ||p|| + ||g||) in [0, 1];
/// defined as 0 when both p and g vanish.
double relative_residual(const DenseSymMatrix& h, const ParamVector& p,
                         const ParamVector& g);

/// Co-kernel residual r_H(p) = ||H(Hp + g)|| / (||H||_F ||Hp + g||);
/// defined as 0 when the residual vanishes.
double cokernel_residual(const DenseSymMatrix& h, const ParamVector& p,
                         const ParamVector& g);

/// Rayleigh quotient of the gradient with respect to the Hessian,
/// g'(Hg)/g'g, via one Hessian-vector product. Throws std::domain_error at
/// a zero gradient, where the quotient is undefined.
double rayleigh_flatness(const ScalarField& field, const ParamVector& theta);

/// Fraction of eigenvalues below -tol * max(1, |lambda|_max).
double morse_index(const Spectrum& spectrum, double tol = 1e-10);

/// Build a flatness report from solver residuals (and optionally the
/// Rayleigh quotient computed by the caller).
FlatnessReport flatness_report(double r, double r_h,
                               std::optional<double> rayleigh,
                               const Cutoffs& cutoffs);

/// Terminal classification of a run.
struct RunOutcome {
  enum class Class { critical, gradient_flat, neither };
  Class outcome_class = Class::neither;
  double terminal_sq_grad_norm = 0.0;
  double terminal_loss = 0.0;
  double morse_index = 0.0;
  double max_r_over_run = 0.0;
};

const char* to_string(RunOutcome::Class c);
/// Figure color convention: critical blue, gradient-flat orange, else black.
const char* class_color(RunOutcome::Class c);

/// Pure function of the trace terminal row and the cutoffs; the Morse index
/// is computed at the terminal point via the field's dense Hessian.
RunOutcome classify_outcome(const IterateTrace& trace, const ScalarField& field,
                            const Cutoffs& cutoffs);

/// Centered moving average with half-width window/2, shrinking at the
/// edges; output length equals input length.
std::vector<double> smooth_trace(const std::vector<double>& values, int window);

}  // namespace flatscan
