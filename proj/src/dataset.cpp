#include "flatscan/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flatscan/io_util.hpp"
#include "flatscan/linalg.hpp"
#include "flatscan/rng.hpp"

namespace flatscan {

Dataset gaussian_dataset(int m, int d, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("gaussian_dataset: need m >= 2");
  if (d < 1) throw std::invalid_argument("gaussian_dataset: need d >= 1");
  Rng rng(seed);
  Eigen::MatrixXd x(m, d);
  // Diagonal covariance linspace(1, d, d); columns sampled in row-major
  // order so the stream layout is part of the format.
  Eigen::VectorXd sdev(d);
  for (int j = 0; j < d; ++j) {
    const double var = d == 1 ? 1.0 : 1.0 + (d - 1.0) * j / (d - 1.0);
    sdev[j] = std::sqrt(var);
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = sdev[j] * rng.gaussian();
  x.rowwise() -= x.colwise().mean();
  Dataset out;
  out.inputs = std::move(x);
  out.meta = "gaussian(m=" + std::to_string(m) + ",d=" + std::to_string(d) +
             ",seed=" + std::to_string(seed) + ")";
  return out;
}

Dataset mixture_dataset(int m, int d, int classes, std::uint64_t seed) {
  if (m < 1 || d < 1 || classes < 2) {
    throw std::invalid_argument("mixture_dataset: need m>=1, d>=1, classes>=2");
  }
  Rng rng(seed);
  Eigen::MatrixXd means(classes, d);
  for (int c = 0; c < classes; ++c)
    for (int j = 0; j < d; ++j) means(c, j) = 2.0 * rng.gaussian();
  Eigen::MatrixXd x(m, d);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, classes);
  for (int i = 0; i < m; ++i) {
    const int c = i % classes;
    for (int j = 0; j < d; ++j) x(i, j) = means(c, j) + rng.gaussian();
    t(i, c) = 1.0;
  }
  Dataset out;
  out.inputs = std::move(x);
  out.targets = std::move(t);
  out.meta = "mixture(m=" + std::to_string(m) + ",d=" + std::to_string(d) +
             ",classes=" + std::to_string(classes) +
             ",seed=" + std::to_string(seed) + ")";
  return out;
}

Dataset zscore(const Dataset& data) {
  Dataset out = data;
  const Eigen::Index m = data.num_samples();
  std::string flagged;
  for (Eigen::Index j = 0; j < data.input_dim(); ++j) {
    const double mean = data.inputs.col(j).mean();
    const double var =
        (data.inputs.col(j).array() - mean).square().sum() / double(m);
    if (var == 0.0) {
      flagged += (flagged.empty() ? "" : ",") + std::to_string(j);
      continue;
    }
    out.inputs.col(j) =
        (data.inputs.col(j).array() - mean) / std::sqrt(var);
  }
  out.meta = data.meta + "|zscore";
  if (!flagged.empty()) {
    out.meta += "(constant columns passed through: " + flagged + ")";
  }
  return out;
}

Dataset pca_project(const Dataset& data, int k) {
  const Eigen::Index d = data.input_dim();
  if (k < 1 || k > d) {
    throw std::invalid_argument("pca_project: k out of range [1, " +
                                std::to_string(d) + "]");
  }
  const Eigen::Index m = data.num_samples();
  Eigen::RowVectorXd mean = data.inputs.colwise().mean();
  Eigen::MatrixXd centered = data.inputs.rowwise() - mean;
  DenseSymMatrix cov(centered.transpose() * centered / double(m));
  const Spectrum spec = sym_eig(cov);
  // Top-k eigenvectors, descending eigenvalue; signs fixed so the largest
  // magnitude component of each direction is positive.
  Eigen::MatrixXd basis(d, k);
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd v = spec.eigenvectors.col(d - 1 - c);
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
    basis.col(c) = v;
  }
  Dataset out = data;
  out.inputs = centered * basis;
  out.meta = data.meta + "|pca(k=" + std::to_string(k) + ")";
  return out;
}

Dataset shuffle_labels(const Dataset& data, std::uint64_t seed) {
  if (!data.targets) {
    throw std::invalid_argument("shuffle_labels: dataset has no targets");
  }
  Dataset out = data;
  Rng rng(seed);
  const auto perm = rng.permutation(static_cast<std::size_t>(data.num_samples()));
  for (Eigen::Index i = 0; i < data.num_samples(); ++i) {
    out.targets->row(i) = data.targets->row(static_cast<Eigen::Index>(perm[i]));
  }
  out.meta = data.meta + "|shuffle_labels(seed=" + std::to_string(seed) + ")";
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

Dataset load_csv(const std::string& path, const TargetSpec& spec) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  bool first_data_row = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    std::vector<double> parsed(cells.size());
    bool all_ok = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      bool ok = false;
      parsed[c] = parse_double(cells[c], ok);
      if (!ok) {
        all_ok = false;
        bad_col = c;
        break;
      }
    }
    if (!all_ok) {
      if (first_data_row) continue;  // optional single header row
      throw std::runtime_error("load_csv: non-numeric cell at row " +
                               std::to_string(lineno) + ", column " +
                               std::to_string(bad_col + 1) + " of " + path);
    }
    if (rows.empty()) {
      width = parsed.size();
    } else if (parsed.size() != width) {
      throw std::runtime_error("load_csv: ragged row " +
                               std::to_string(lineno) + " (" +
                               std::to_string(parsed.size()) + " cells, expected " +
                               std::to_string(width) + ") of " + path);
    }
    rows.push_back(std::move(parsed));
    first_data_row = false;
  }
  if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index w = static_cast<Eigen::Index>(width);
  for (int col : spec.columns) {
    if (col < 0 || col >= w) {
      throw std::runtime_error("load_csv: target column " +
                               std::to_string(col) + " out of range");
    }
  }

  std::vector<bool> is_target(width, false);
  if (spec.mode == TargetSpec::Mode::one_hot) {
    if (spec.columns.size() != 1) {
      throw std::runtime_error("load_csv: one_hot needs exactly one label column");
    }
    if (spec.num_classes < 2) {
      throw std::runtime_error("load_csv: one_hot needs num_classes >= 2");
    }
    is_target[static_cast<std::size_t>(spec.columns[0])] = true;
  } else if (spec.mode == TargetSpec::Mode::regression) {
    if (spec.columns.empty()) {
      throw std::runtime_error("load_csv: regression needs target columns");
    }
    for (int col : spec.columns) is_target[static_cast<std::size_t>(col)] = true;
  }

  Eigen::Index n_target_cols = 0;
  for (bool b : is_target) n_target_cols += b ? 1 : 0;
  Dataset out;
  out.inputs.resize(m, w - n_target_cols);
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index jj = 0;
    for (Eigen::Index j = 0; j < w; ++j) {
      if (!is_target[static_cast<std::size_t>(j)]) {
        out.inputs(i, jj++) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    }
  }
  if (spec.mode == TargetSpec::Mode::one_hot) {
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, spec.num_classes);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double raw = rows[static_cast<std::size_t>(i)]
                             [static_cast<std::size_t>(spec.columns[0])];
      const long label = std::lround(raw);
      if (label < 0 || label >= spec.num_classes) {
        throw std::runtime_error("load_csv: label " + format_double(raw) +
                                 " at row " + std::to_string(i + 1) +
                                 " outside [0, " +
                                 std::to_string(spec.num_classes) + ")");
      }
      t(i, label) = 1.0;
    }
    out.targets = std::move(t);
  } else if (spec.mode == TargetSpec::Mode::regression) {
    Eigen::MatrixXd t(m, static_cast<Eigen::Index>(spec.columns.size()));
    for (Eigen::Index i = 0; i < m; ++i) {
      for (std::size_t c = 0; c < spec.columns.size(); ++c) {
        t(i, static_cast<Eigen::Index>(c)) =
            rows[static_cast<std::size_t>(i)]
                [static_cast<std::size_t>(spec.columns[c])];
      }
    }
    out.targets = std::move(t);
  }
  if (!out.inputs.allFinite() ||
      (out.targets && !out.targets->allFinite())) {
    throw std::runtime_error("load_csv: non-finite values in " + path);
  }
  out.meta = "csv(" + path + ")";
  return out;
}

std::string dataset_to_csv(const Dataset& data) {
  std::string s;
  const Eigen::Index d = data.input_dim();
  const Eigen::Index c = data.targets ? data.targets->cols() : 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j) s += ',';
    s += "x" + std::to_string(j);
  }
  for (Eigen::Index j = 0; j < c; ++j) {
    s += ",t" + std::to_string(j);
  }
  s += '\n';
  for (Eigen::Index i = 0; i < data.num_samples(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (j) s += ',';
      s += format_double(data.inputs(i, j));
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      s += ',' + format_double((*data.targets)(i, j));
    }
    s += '\n';
  }
  return s;
}

}  // namespace flatscan
