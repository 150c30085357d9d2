#include "flatscan/scalar_field.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace flatscan {

DenseSymMatrix ScalarField::hessian(const ParamVector& theta) const {
  return dense_hessian(*this, theta);
}

ParamVector fd_gradient(const ScalarField& field, const ParamVector& theta,
                        double h) {
  if (h <= 0) throw std::invalid_argument("fd_gradient: h must be > 0");
  ParamVector g(theta.size());
  ParamVector probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double fp = field.value(probe);
    probe[i] = theta[i] - h;
    const double fm = field.value(probe);
    probe[i] = theta[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

ParamVector fd_hvp(const ScalarField& field, const ParamVector& theta,
                   const ParamVector& v, double h) {
  if (h <= 0) throw std::invalid_argument("fd_hvp: h must be > 0");
  return (field.gradient(theta + h * v) - field.gradient(theta - h * v)) /
         (2.0 * h);
}

DenseSymMatrix dense_hessian(const ScalarField& field,
                             const ParamVector& theta) {
  const Eigen::Index n = field.dim();
  Eigen::MatrixXd h(n, n);
  ParamVector basis = ParamVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis[i] = 1.0;
    h.col(i) = field.hvp(theta, basis);
    basis[i] = 0.0;
  }
  return DenseSymMatrix(h);
}

double fd_default_step(const ParamVector& theta) {
  const double scale =
      theta.size() > 0 ? theta.cwiseAbs().maxCoeff() : 0.0;
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + scale);
}

}  // namespace flatscan
