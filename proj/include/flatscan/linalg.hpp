#pragma once

#include <Eigen/Dense>

namespace flatscan {

/// Flat parameter vector (theta).
using ParamVector = Eigen::VectorXd;

/// Dense real symmetric matrix. Construction symmetrizes the input by
/// (M + M^T)/2 — autodiff Hessians carry rounding asymmetry and the kernel
/// identities used downstream require exact symmetry — and rejects
/// non-finite entries.
class DenseSymMatrix {
 public:
  explicit DenseSymMatrix(const Eigen::MatrixXd& m);

  Eigen::Index size() const { return mat_.rows(); }
  const Eigen::MatrixXd& matrix() const { return mat_; }

  ParamVector apply(const ParamVector& v) const { return mat_ * v; }

 private:
  Eigen::MatrixXd mat_;
};

/// Full symmetric eigendecomposition: eigenvalues ascending, eigenvectors
/// orthonormal columns (column i pairs with eigenvalues[i]).
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

/// Dense symmetric eigendecomposition. Throws std::runtime_error if the
/// iterative eigensolver fails to converge (message carries the sweep limit).
Spectrum sym_eig(const DenseSymMatrix& m);

/// Minimum-norm least-squares solve x = M^+ b. Singular values (here
/// |eigenvalues|) below rank_tol * sigma_max are treated as zero.
ParamVector pinv_solve(const DenseSymMatrix& m, const ParamVector& b,
                       double rank_tol = 1e-10);

double frobenius_norm(const DenseSymMatrix& m);

}  // namespace flatscan
