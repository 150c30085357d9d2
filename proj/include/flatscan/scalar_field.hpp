#pragma once

#include "flatscan/linalg.hpp"

namespace flatscan {

/// A twice-differentiable objective f: R^n -> R exposing value, gradient,
/// Hessian-vector product and (materialized) dense Hessian. Implementations
/// must be pure and immutable after construction: evaluation is reentrant
/// and safe to call from multiple threads concurrently.
class ScalarField {
 public:
  virtual ~ScalarField() = default;

  virtual Eigen::Index dim() const = 0;
  virtual double value(const ParamVector& theta) const = 0;
  virtual ParamVector gradient(const ParamVector& theta) const = 0;
  virtual ParamVector hvp(const ParamVector& theta,
                          const ParamVector& v) const = 0;

  /// Dense Hessian. Default: n Hessian-vector products against the basis,
  /// symmetrized by DenseSymMatrix construction.
  virtual DenseSymMatrix hessian(const ParamVector& theta) const;
};

/// Central-difference gradient, entry i = (f(theta+h e_i) - f(theta-h e_i))/(2h).
ParamVector fd_gradient(const ScalarField& field, const ParamVector& theta,
                        double h);

/// Central-difference Hessian-vector product (grad(theta+hv) - grad(theta-hv))/(2h).
ParamVector fd_hvp(const ScalarField& field, const ParamVector& theta,
                   const ParamVector& v, double h);

/// Materialized Hessian via hvp columns (free-function form of the default).
DenseSymMatrix dense_hessian(const ScalarField& field, const ParamVector& theta);

/// Default central-difference step, scaled to the evaluation point:
/// cube-root(machine epsilon) * (1 + ||theta||_inf).
double fd_default_step(const ParamVector& theta);

}  // namespace flatscan
