#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace flatscan {

/// Immutable sample matrix with optional targets. Rows are samples.
/// meta carries generation seed and provenance for experiment manifests.
struct Dataset {
  Eigen::MatrixXd inputs;                  // m x d
  std::optional<Eigen::MatrixXd> targets;  // m x c when present
  std::string meta;

  Eigen::Index num_samples() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
};

/// m samples from N(0, diag(linspace(1, d, d))), mean-centered exactly
/// (column means subtracted after sampling).
Dataset gaussian_dataset(int m, int d, std::uint64_t seed);

/// Desk-scale surrogate for a downsampled image classification set: a
/// seeded Gaussian mixture with one-hot targets. Class c has mean
/// 2*N(0, I_d) and unit isotropic noise; classes are assigned round-robin.
Dataset mixture_dataset(int m, int d, int classes, std::uint64_t seed);

/// Columns scaled to mean 0, variance 1 (population convention). Columns
/// with zero variance pass through unscaled and are flagged in meta.
Dataset zscore(const Dataset& data);

/// Projection onto the top-k principal components of the centered input
/// covariance; output dimension k. Targets pass through.
Dataset pca_project(const Dataset& data, int k);

/// Targets permuted by a seeded permutation; inputs untouched.
Dataset shuffle_labels(const Dataset& data, std::uint64_t seed);

/// How load_csv splits columns into inputs and targets.
struct TargetSpec {
  enum class Mode { none, one_hot, regression };
  Mode mode = Mode::none;
  std::vector<int> columns;  // one_hot: single label column; regression: target columns
  int num_classes = 0;       // one_hot only
};

/// Load a rectangular numeric CSV (optional single header row, autodetected
/// by non-numeric cells in the first row). Parse failures name the 1-based
/// row and column; ragged rows are rejected.
Dataset load_csv(const std::string& path, const TargetSpec& spec);

/// Serialize a dataset back to CSV with header x0..x{d-1}[,t0..t{c-1}].
std::string dataset_to_csv(const Dataset& data);

}  // namespace flatscan
