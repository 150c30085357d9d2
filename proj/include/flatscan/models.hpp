#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "flatscan/dataset.hpp"
#include "flatscan/scalar_field.hpp"

namespace flatscan {

/// Two-dimensional quartic test surface
///   f(x, y) = 1/4 x^4 - 3 x^2 + 9 x + 0.9 y^4 + 5 y^2 + 40
/// with one critical point at (-3, 0) and strict gradient-flat points at
/// (+-sqrt(2), 0) where the gradient lies in the Hessian kernel.
std::shared_ptr<const ScalarField> quartic_field();

/// swish(x) = x * sigmoid(x), and its first two derivatives.
double swish(double x);
double swish_d1(double x);
double swish_d2(double x);

/// Architecture and loss of a small fully-connected network.
struct NetworkSpec {
  std::vector<int> layer_widths;  // input, hidden..., output
  enum class Activation { identity, swish };
  Activation activation = Activation::identity;
  bool use_biases = false;
  enum class LossKind { mse, cross_entropy };
  LossKind loss_kind = LossKind::mse;
  double l2_coeff = 0.0;

  int param_count() const;
  void validate() const;
};

/// Full-batch loss field L(theta) over the dataset, with analytic gradient
/// and forward-over-reverse Hessian-vector product. MSE is the mean over
/// samples of the squared reconstruction error summed over outputs; an MSE
/// network without targets autoencodes its inputs. Adds l2_coeff*||theta||^2
/// when l2_coeff > 0.
std::shared_ptr<const ScalarField> network_field(const NetworkSpec& spec,
                                                 const Dataset& data);

/// Seeded uniform(-a, a) initialization with a = 1/sqrt(fan_in) per layer.
ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed);

struct CriticalPointRecord {
  ParamVector params;
  double loss = 0.0;
  double morse_index = 0.0;  // fraction of negative Hessian eigenvalues
  enum class Provenance { analytic, numerical };
  Provenance provenance = Provenance::analytic;
  std::vector<int> subset;  // selected covariance eigendirections
};

/// All critical points of the single-hidden-layer linear autoencoder on
/// data whose covariance has the given (distinct, positive) eigenvalues:
/// one record per index subset S with |S| <= hidden_width. Parameters
/// realize the projection onto the selected eigendirections, the loss is
/// the sum of the unselected eigenvalues, and the Morse index is computed
/// numerically at the constructed point. Repeated eigenvalues are rejected.
std::vector<CriticalPointRecord> linear_ae_critical_points(
    const std::vector<double>& cov_eigenvalues, int hidden_width);

}  // namespace flatscan
