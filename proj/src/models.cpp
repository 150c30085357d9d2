#include "flatscan/models.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "flatscan/diagnostics.hpp"
#include "flatscan/rng.hpp"

namespace flatscan {

namespace {

class QuarticField final : public ScalarField {
 public:
  Eigen::Index dim() const override { return 2; }

  double value(const ParamVector& t) const override {
    const double x = t[0], y = t[1];
    return 0.25 * x * x * x * x - 3.0 * x * x + 9.0 * x +
           0.9 * y * y * y * y + 5.0 * y * y + 40.0;
  }

  ParamVector gradient(const ParamVector& t) const override {
    const double x = t[0], y = t[1];
    ParamVector g(2);
    g[0] = x * x * x - 6.0 * x + 9.0;
    g[1] = 3.6 * y * y * y + 10.0 * y;
    return g;
  }

  ParamVector hvp(const ParamVector& t, const ParamVector& v) const override {
    const double x = t[0], y = t[1];
    ParamVector out(2);
    out[0] = (3.0 * x * x - 6.0) * v[0];
    out[1] = (10.8 * y * y + 10.0) * v[1];
    return out;
  }

  DenseSymMatrix hessian(const ParamVector& t) const override {
    const double x = t[0], y = t[1];
    Eigen::Matrix2d h;
    h << 3.0 * x * x - 6.0, 0.0, 0.0, 10.8 * y * y + 10.0;
    return DenseSymMatrix(h);
  }
};

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::shared_ptr<const ScalarField> quartic_field() {
  return std::make_shared<QuarticField>();
}

double swish(double x) { return x * sigmoid(x); }

double swish_d1(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

double swish_d2(double x) {
  const double s = sigmoid(x);
  const double sp = s * (1.0 - s);
  return sp * (2.0 + x * (1.0 - 2.0 * s));
}

int NetworkSpec::param_count() const {
  int n = 0;
  for (std::size_t l = 0; l + 1 < layer_widths.size(); ++l) {
    n += layer_widths[l] * layer_widths[l + 1];
    if (use_biases) n += layer_widths[l + 1];
  }
  return n;
}

void NetworkSpec::validate() const {
  if (layer_widths.size() < 3) {
    throw std::invalid_argument("NetworkSpec: need at least one hidden layer");
  }
  for (int w : layer_widths) {
    if (w < 1) throw std::invalid_argument("NetworkSpec: widths must be >= 1");
  }
  if (l2_coeff < 0) {
    throw std::invalid_argument("NetworkSpec: l2_coeff must be >= 0");
  }
}

namespace {

using Matrix = Eigen::MatrixXd;
using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;

class NetworkField final : public ScalarField {
 public:
  NetworkField(const NetworkSpec& spec, const Dataset& data) : spec_(spec) {
    spec_.validate();
    const auto& widths = spec_.layer_widths;
    if (data.input_dim() != widths.front()) {
      throw std::invalid_argument("network_field: data dimension " +
                                  std::to_string(data.input_dim()) +
                                  " does not match input width " +
                                  std::to_string(widths.front()));
    }
    x_ = data.inputs;
    if (data.targets) {
      if (data.targets->cols() != widths.back()) {
        throw std::invalid_argument("network_field: target dimension " +
                                    std::to_string(data.targets->cols()) +
                                    " does not match output width " +
                                    std::to_string(widths.back()));
      }
      t_ = *data.targets;
    } else {
      if (spec_.loss_kind == NetworkSpec::LossKind::cross_entropy) {
        throw std::invalid_argument(
            "network_field: cross_entropy requires label data");
      }
      if (widths.back() != widths.front()) {
        throw std::invalid_argument(
            "network_field: autoencoder output width must equal input width");
      }
      t_ = x_;
    }
    layers_ = static_cast<int>(widths.size()) - 1;
    int offset = 0;
    for (int l = 0; l < layers_; ++l) {
      w_offsets_.push_back(offset);
      offset += widths[l + 1] * widths[l];
      if (spec_.use_biases) {
        b_offsets_.push_back(offset);
        offset += widths[l + 1];
      }
    }
    n_ = offset;
  }

  Eigen::Index dim() const override { return n_; }

  double value(const ParamVector& theta) const override {
    check_dim(theta);
    Matrix a = x_;
    for (int l = 0; l < layers_; ++l) {
      a = layer_out(theta, l, a);
      if (l + 1 < layers_) activate_inplace(a);
    }
    double loss;
    if (spec_.loss_kind == NetworkSpec::LossKind::mse) {
      loss = (a - t_).squaredNorm() / double(x_.rows());
    } else {
      loss = cross_entropy(a);
    }
    if (spec_.l2_coeff > 0) loss += spec_.l2_coeff * theta.squaredNorm();
    return loss;
  }

  ParamVector gradient(const ParamVector& theta) const override {
    check_dim(theta);
    std::vector<Matrix> act, pre;
    forward(theta, act, pre);
    ParamVector grad = ParamVector::Zero(n_);
    Matrix delta = output_delta(pre.back());
    backward(theta, act, pre, delta, grad);
    if (spec_.l2_coeff > 0) grad += 2.0 * spec_.l2_coeff * theta;
    return grad;
  }

  ParamVector hvp(const ParamVector& theta, const ParamVector& v) const override {
    check_dim(theta);
    if (v.size() != n_) throw std::invalid_argument("hvp: direction size");
    std::vector<Matrix> act, pre;
    forward(theta, act, pre);

    // Forward tangents of activations and pre-activations along v.
    std::vector<Matrix> ract(layers_ + 1), rpre(layers_);
    ract[0] = Matrix::Zero(x_.rows(), x_.cols());
    for (int l = 0; l < layers_; ++l) {
      rpre[l] = ract[l] * weight(theta, l).transpose() +
                act[l] * weight_dir(v, l).transpose();
      if (spec_.use_biases) rpre[l].rowwise() += bias_dir(v, l).transpose();
      if (l + 1 < layers_) {
        ract[l + 1] = rpre[l];
        scale_by_act_d1(pre[l], ract[l + 1]);
      }
    }

    // Reverse pass carrying (delta, rdelta) together.
    const double m = double(x_.rows());
    Matrix delta = output_delta(pre.back());
    Matrix rdelta;
    if (spec_.loss_kind == NetworkSpec::LossKind::mse) {
      rdelta = (2.0 / m) * rpre.back();
    } else {
      const Matrix s = softmax(pre.back());
      const Matrix sr = s.cwiseProduct(rpre.back());
      rdelta = (sr - s.cwiseProduct((sr.rowwise().sum()) *
                                    Eigen::RowVectorXd::Ones(s.cols()))) /
               m;
    }

    ParamVector out = ParamVector::Zero(n_);
    for (int l = layers_ - 1; l >= 0; --l) {
      weight_grad(out, l) = rdelta.transpose() * act[l] +
                            delta.transpose() * ract[l];
      if (spec_.use_biases) bias_grad(out, l) = rdelta.colwise().sum();
      if (l > 0) {
        const Matrix g = delta * weight(theta, l);
        Matrix rg = rdelta * weight(theta, l) + delta * weight_dir(v, l);
        // d/dv of [g .* act'(z)] = rg .* act'(z) + g .* act''(z) .* rz
        Matrix rnext = rg;
        scale_by_act_d1(pre[l - 1], rnext);
        if (spec_.activation == NetworkSpec::Activation::swish) {
          Matrix curv = g.cwiseProduct(rpre[l - 1]);
          scale_by_act_d2(pre[l - 1], curv);
          rnext += curv;
        }
        rdelta = std::move(rnext);
        Matrix next = g;
        scale_by_act_d1(pre[l - 1], next);
        delta = std::move(next);
      }
    }
    if (spec_.l2_coeff > 0) out += 2.0 * spec_.l2_coeff * v;
    return out;
  }

 private:
  void check_dim(const ParamVector& theta) const {
    if (theta.size() != n_) {
      throw std::invalid_argument("network_field: parameter size " +
                                  std::to_string(theta.size()) +
                                  ", expected " + std::to_string(n_));
    }
  }

  RowMajorMap weight(const ParamVector& theta, int l) const {
    return RowMajorMap(theta.data() + w_offsets_[l],
                       spec_.layer_widths[l + 1], spec_.layer_widths[l]);
  }
  RowMajorMap weight_dir(const ParamVector& v, int l) const {
    return RowMajorMap(v.data() + w_offsets_[l], spec_.layer_widths[l + 1],
                       spec_.layer_widths[l]);
  }
  RowMajorMutMap weight_grad(ParamVector& g, int l) const {
    return RowMajorMutMap(g.data() + w_offsets_[l], spec_.layer_widths[l + 1],
                          spec_.layer_widths[l]);
  }
  Eigen::Map<const Eigen::VectorXd> bias(const ParamVector& theta, int l) const {
    return {theta.data() + b_offsets_[l], spec_.layer_widths[l + 1]};
  }
  Eigen::Map<const Eigen::VectorXd> bias_dir(const ParamVector& v, int l) const {
    return {v.data() + b_offsets_[l], spec_.layer_widths[l + 1]};
  }
  Eigen::Map<Eigen::RowVectorXd> bias_grad(ParamVector& g, int l) const {
    return {g.data() + b_offsets_[l], spec_.layer_widths[l + 1]};
  }

  Matrix layer_out(const ParamVector& theta, int l, const Matrix& a) const {
    Matrix z = a * weight(theta, l).transpose();
    if (spec_.use_biases) z.rowwise() += bias(theta, l).transpose();
    return z;
  }

  void activate_inplace(Matrix& z) const {
    if (spec_.activation == NetworkSpec::Activation::swish) {
      z = z.unaryExpr([](double x) { return swish(x); });
    }
  }
  void scale_by_act_d1(const Matrix& z, Matrix& target) const {
    if (spec_.activation == NetworkSpec::Activation::swish) {
      target.array() *= z.unaryExpr([](double x) { return swish_d1(x); }).array();
    }
  }
  void scale_by_act_d2(const Matrix& z, Matrix& target) const {
    target.array() *= z.unaryExpr([](double x) { return swish_d2(x); }).array();
  }

  void forward(const ParamVector& theta, std::vector<Matrix>& act,
               std::vector<Matrix>& pre) const {
    act.resize(layers_ + 1);
    pre.resize(layers_);
    act[0] = x_;
    for (int l = 0; l < layers_; ++l) {
      pre[l] = layer_out(theta, l, act[l]);
      if (l + 1 < layers_) {
        act[l + 1] = pre[l];
        activate_inplace(act[l + 1]);
      } else {
        act[l + 1] = pre[l];
      }
    }
  }

  Matrix softmax(const Matrix& logits) const {
    Matrix s = logits;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double mx = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - mx).exp();
      s.row(i) /= s.row(i).sum();
    }
    return s;
  }

  double cross_entropy(const Matrix& logits) const {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double mx = logits.row(i).maxCoeff();
      const double lse =
          mx + std::log((logits.row(i).array() - mx).exp().sum());
      loss += lse - logits.row(i).dot(t_.row(i));
    }
    return loss / double(logits.rows());
  }

  Matrix output_delta(const Matrix& logits) const {
    const double m = double(x_.rows());
    if (spec_.loss_kind == NetworkSpec::LossKind::mse) {
      return (2.0 / m) * (logits - t_);
    }
    return (softmax(logits) - t_) / m;
  }

  void backward(const ParamVector& theta, const std::vector<Matrix>& act,
                const std::vector<Matrix>& pre, Matrix delta,
                ParamVector& grad) const {
    for (int l = layers_ - 1; l >= 0; --l) {
      weight_grad(grad, l) = delta.transpose() * act[l];
      if (spec_.use_biases) bias_grad(grad, l) = delta.colwise().sum();
      if (l > 0) {
        Matrix g = delta * weight(theta, l);
        scale_by_act_d1(pre[l - 1], g);
        delta = std::move(g);
      }
    }
  }

  NetworkSpec spec_;
  Matrix x_, t_;
  int layers_ = 0;
  int n_ = 0;
  std::vector<int> w_offsets_, b_offsets_;
};

}  // namespace

std::shared_ptr<const ScalarField> network_field(const NetworkSpec& spec,
                                                 const Dataset& data) {
  return std::make_shared<NetworkField>(spec, data);
}

ParamVector init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ParamVector theta(spec.param_count());
  int offset = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const int fan_in = spec.layer_widths[l];
    const int fan_out = spec.layer_widths[l + 1];
    const double a = 1.0 / std::sqrt(double(fan_in));
    for (int i = 0; i < fan_out * fan_in; ++i) {
      theta[offset++] = rng.uniform(-a, a);
    }
    if (spec.use_biases) {
      for (int i = 0; i < fan_out; ++i) theta[offset++] = rng.uniform(-a, a);
    }
  }
  return theta;
}

std::vector<CriticalPointRecord> linear_ae_critical_points(
    const std::vector<double>& cov_eigenvalues, int hidden_width) {
  const int d = static_cast<int>(cov_eigenvalues.size());
  if (d < 1) throw std::invalid_argument("linear_ae_critical_points: empty spectrum");
  if (hidden_width < 1 || hidden_width > d) {
    throw std::invalid_argument(
        "linear_ae_critical_points: hidden_width out of range");
  }
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    if (cov_eigenvalues[i] <= 0) {
      throw std::invalid_argument(
          "linear_ae_critical_points: eigenvalues must be positive");
    }
    for (int j = i + 1; j < d; ++j) {
      if (cov_eigenvalues[i] == cov_eigenvalues[j]) {
        throw std::invalid_argument(
            "linear_ae_critical_points: repeated eigenvalue " +
            std::to_string(cov_eigenvalues[i]) +
            " (degenerate critical manifolds are out of scope)");
      }
    }
    total += cov_eigenvalues[i];
  }

  // Canonical dataset with exactly the requested covariance: paired rows
  // +-sqrt(lambda_j * m / 2) e_j give empirical covariance diag(lambda).
  // Loss and Morse index depend on the data only through the covariance.
  const int m = 2 * d;
  Dataset canon;
  canon.inputs = Eigen::MatrixXd::Zero(m, d);
  for (int j = 0; j < d; ++j) {
    const double v = std::sqrt(cov_eigenvalues[j] * m / 2.0);
    canon.inputs(2 * j, j) = v;
    canon.inputs(2 * j + 1, j) = -v;
  }
  canon.meta = "linear_ae_canonical";

  NetworkSpec spec;
  spec.layer_widths = {d, hidden_width, d};
  spec.activation = NetworkSpec::Activation::identity;
  spec.use_biases = false;
  spec.loss_kind = NetworkSpec::LossKind::mse;
  spec.l2_coeff = 0.0;
  const auto field = network_field(spec, canon);

  // Enumerate subsets by size, then lexicographically.
  std::vector<std::vector<int>> subsets;
  for (int size = 0; size <= hidden_width; ++size) {
    std::vector<int> pick(size);
    const std::function<void(int, int)> rec = [&](int start, int slot) {
      if (slot == size) {
        subsets.emplace_back(pick.begin(), pick.end());
        return;
      }
      for (int i = start; i < d; ++i) {
        pick[slot] = i;
        rec(i + 1, slot + 1);
      }
    };
    rec(0, 0);
  }

  std::vector<CriticalPointRecord> records;
  records.reserve(subsets.size());
  for (const auto& subset : subsets) {
    // W1 rows are the selected basis directions, W2 = W1^T, so the network
    // map is the orthogonal projection onto span{e_i : i in S}.
    ParamVector theta = ParamVector::Zero(spec.param_count());
    for (std::size_t r = 0; r < subset.size(); ++r) {
      theta[static_cast<Eigen::Index>(r) * d + subset[r]] = 1.0;       // W1
      theta[hidden_width * d + subset[r] * hidden_width +
            static_cast<Eigen::Index>(r)] = 1.0;                      // W2
    }
    CriticalPointRecord rec;
    rec.params = theta;
    rec.subset = subset;
    double selected = 0.0;
    for (int i : subset) selected += cov_eigenvalues[i];
    rec.loss = total - selected;
    rec.provenance = CriticalPointRecord::Provenance::analytic;
    const Spectrum hess_spec = sym_eig(field->hessian(theta));
    rec.morse_index = morse_index(hess_spec, 1e-10);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace flatscan
