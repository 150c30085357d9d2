#include "flatscan/linalg.hpp"

#include <stdexcept>
#include <string>

namespace flatscan {

DenseSymMatrix::DenseSymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("DenseSymMatrix: matrix must be square, got " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
  }
  if (!m.allFinite()) {
    throw std::invalid_argument("DenseSymMatrix: non-finite entries");
  }
  mat_ = 0.5 * (m + m.transpose());
}

Spectrum sym_eig(const DenseSymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error(
        "sym_eig: eigensolver did not converge within " +
        std::to_string(Eigen::SelfAdjointEigenSolver<
                           Eigen::MatrixXd>::m_maxIterations *
                       m.size()) +
        " implicit QL sweeps");
  }
  return Spectrum{solver.eigenvalues(), solver.eigenvectors()};
}

ParamVector pinv_solve(const DenseSymMatrix& m, const ParamVector& b,
                       double rank_tol) {
  if (b.size() != m.size()) {
    throw std::invalid_argument("pinv_solve: dimension mismatch");
  }
  if (rank_tol < 0) {
    throw std::invalid_argument("pinv_solve: rank_tol must be >= 0");
  }
  const Spectrum spec = sym_eig(m);
  // For symmetric M the singular values are |eigenvalues|.
  const double sigma_max = spec.eigenvalues.cwiseAbs().maxCoeff();
  const double cutoff = rank_tol * sigma_max;
  Eigen::VectorXd coeffs = spec.eigenvectors.transpose() * b;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    const double lambda = spec.eigenvalues[i];
    coeffs[i] = std::abs(lambda) > cutoff ? coeffs[i] / lambda : 0.0;
  }
  return spec.eigenvectors * coeffs;
}

double frobenius_norm(const DenseSymMatrix& m) { return m.matrix().norm(); }

}  // namespace flatscan
