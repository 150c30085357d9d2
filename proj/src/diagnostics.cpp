#include "flatscan/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flatscan {

double relative_residual(const DenseSymMatrix& h, const ParamVector& p,
                         const ParamVector& g) {
  const ParamVector res = h.apply(p) + g;
  const double res_norm = res.norm();
  if (res_norm == 0.0) return 0.0;
  const double denom = frobenius_norm(h) * p.norm() + g.norm();
  if (denom == 0.0) return 0.0;
  return std::clamp(res_norm / denom, 0.0, 1.0);
}

double cokernel_residual(const DenseSymMatrix& h, const ParamVector& p,
                         const ParamVector& g) {
  const ParamVector res = h.apply(p) + g;
  const double res_norm = res.norm();
  if (res_norm == 0.0) return 0.0;
  const double denom = frobenius_norm(h) * res_norm;
  if (denom == 0.0) return 0.0;
  return std::clamp(h.apply(res).norm() / denom, 0.0, 1.0);
}

double rayleigh_flatness(const ScalarField& field, const ParamVector& theta) {
  const ParamVector g = field.gradient(theta);
  const double gg = g.squaredNorm();
  if (gg == 0.0) {
    throw std::domain_error(
        "rayleigh_flatness: undefined at a zero gradient");
  }
  return g.dot(field.hvp(theta, g)) / gg;
}

double morse_index(const Spectrum& spectrum, double tol) {
  const Eigen::Index n = spectrum.eigenvalues.size();
  if (n == 0) throw std::invalid_argument("morse_index: empty spectrum");
  const double scale =
      std::max(1.0, spectrum.eigenvalues.cwiseAbs().maxCoeff());
  const double cutoff = -tol * scale;
  Eigen::Index negatives = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spectrum.eigenvalues[i] < cutoff) ++negatives;
  }
  return double(negatives) / double(n);
}

FlatnessReport flatness_report(double r, double r_h,
                               std::optional<double> rayleigh,
                               const Cutoffs& cutoffs) {
  FlatnessReport rep;
  rep.r = r;
  rep.r_h = r_h;
  rep.rayleigh = rayleigh;
  rep.thresholds = cutoffs;
  rep.is_gradient_flat = r > cutoffs.r && r_h < cutoffs.r_h;
  return rep;
}

const char* to_string(RunOutcome::Class c) {
  switch (c) {
    case RunOutcome::Class::critical: return "critical";
    case RunOutcome::Class::gradient_flat: return "gradient_flat";
    case RunOutcome::Class::neither: return "neither";
  }
  return "unknown";
}

const char* class_color(RunOutcome::Class c) {
  switch (c) {
    case RunOutcome::Class::critical: return "blue";
    case RunOutcome::Class::gradient_flat: return "orange";
    case RunOutcome::Class::neither: return "black";
  }
  return "unknown";
}

RunOutcome classify_outcome(const IterateTrace& trace, const ScalarField& field,
                            const Cutoffs& cutoffs) {
  if (trace.rows.empty()) {
    throw std::invalid_argument("classify_outcome: empty trace");
  }
  const TraceRow& last = trace.rows.back();
  RunOutcome out;
  out.terminal_sq_grad_norm = last.sq_grad_norm;
  out.terminal_loss = last.loss;
  out.max_r_over_run = trace.max_r;
  if (last.sq_grad_norm < cutoffs.grad_sq) {
    out.outcome_class = RunOutcome::Class::critical;
  } else if (last.r > cutoffs.r && last.r_h < cutoffs.r_h) {
    out.outcome_class = RunOutcome::Class::gradient_flat;
  } else {
    out.outcome_class = RunOutcome::Class::neither;
  }
  out.morse_index = morse_index(sym_eig(field.hessian(trace.terminal_theta)));
  return out;
}

std::vector<double> smooth_trace(const std::vector<double>& values,
                                 int window) {
  if (window < 1) throw std::invalid_argument("smooth_trace: window must be >= 1");
  const int n = static_cast<int>(values.size());
  std::vector<double> out(values.size());
  const int half = window / 2;
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (int j = lo; j <= hi; ++j) sum += values[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = sum / double(hi - lo + 1);
  }
  return out;
}

}  // namespace flatscan
