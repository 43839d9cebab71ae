#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "coughscreen/classifiers.hpp"

namespace coughscreen::classifiers {
namespace {

bool on_step(double value, double lo, double hi, double step) {
  if (value < lo - 1e-12 || value > hi + 1e-12) return false;
  const double k = (value - lo) / step;
  return std::abs(k - std::round(k)) < 1e-9;
}

bool in_decades(double value, double lo, double hi) {
  return std::isfinite(value) && value >= lo * (1 - 1e-12) && value <= hi * (1 + 1e-12);
}

double rbf_or_linear(const ClassifierSpec& spec, std::span<const double> a,
                     std::span<const double> b) {
  if (spec.kernel == Kernel::kLinear) return dot(a, b);
  return std::exp(-spec.svm_gamma * squared_distance(a, b));
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::kLR:
      return "lr";
    case Family::kKNN:
      return "knn";
    case Family::kSVM:
      return "svm";
    case Family::kMLP:
      return "mlp";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "lr") return Family::kLR;
  if (n == "knn") return Family::kKNN;
  if (n == "svm") return Family::kSVM;
  if (n == "mlp") return Family::kMLP;
  throw ConfigError("unknown classifier family '" + name + "' (expected lr, knn, svm or mlp)");
}

std::string to_string(Kernel kernel) { return kernel == Kernel::kLinear ? "linear" : "rbf"; }

Kernel parse_kernel(const std::string& name) {
  if (name == "linear") return Kernel::kLinear;
  if (name == "rbf") return Kernel::kRbf;
  throw ConfigError("unknown kernel '" + name + "' (expected linear or rbf)");
}

void ClassifierSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  switch (family) {
    case Family::kLR:
      if (!(nu1 > 0.0) || !std::isfinite(nu1)) fail("lr: nu1 must be positive and finite");
      if (!(nu2 >= 0.0) || !(nu3 >= 0.0) || !std::isfinite(nu2) || !std::isfinite(nu3)) {
        fail("lr: nu2 and nu3 must be finite and >= 0");
      }
      if (!(lr_tolerance > 0.0) || lr_max_iterations == 0) {
        fail("lr: tolerance and iteration cap must be positive");
      }
      if (paper_mode) {
        if (!in_decades(nu1, 1e-7, 1e7)) fail("paper mode: nu1 must lie in [1e-7, 1e7]");
        if (!on_step(nu2, 0.0, 1.0, 0.05)) fail("paper mode: nu2 must be 0..1 in steps of 0.05");
        if (std::abs(nu2 + nu3 - 1.0) > 1e-9) fail("paper mode: nu3 must equal 1 - nu2");
      }
      break;
    case Family::kKNN:
      if (neighbours == 0 || leaf_size == 0) fail("knn: neighbours and leaf_size must be >= 1");
      if (paper_mode) {
        if (neighbours < 10 || neighbours > 100 || neighbours % 10 != 0) {
          fail("paper mode: neighbours must be 10..100 in steps of 10");
        }
        if (leaf_size < 5 || leaf_size > 30 || leaf_size % 5 != 0) {
          fail("paper mode: leaf_size must be 5..30 in steps of 5");
        }
      }
      break;
    case Family::kSVM:
      if (!(svm_c > 0.0) || !std::isfinite(svm_c)) fail("svm: C must be positive and finite");
      if (!(svm_gamma > 0.0) || !std::isfinite(svm_gamma)) {
        fail("svm: gamma must be positive and finite");
      }
      if (!(svm_tolerance > 0.0)) fail("svm: tolerance must be positive");
      if (paper_mode) {
        if (!in_decades(svm_c, 1e-7, 1e7)) fail("paper mode: svm C must lie in [1e-7, 1e7]");
        if (!in_decades(svm_gamma, 1e-7, 1e7)) {
          fail("paper mode: svm gamma must lie in [1e-7, 1e7]");
        }
      }
      break;
    case Family::kMLP:
      if (hidden == 0) fail("mlp: hidden must be >= 1");
      if (!(mlp_l2 >= 0.0) || !std::isfinite(mlp_l2)) fail("mlp: l2 must be finite and >= 0");
      if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail("mlp: learning_rate must be positive");
      }
      if (epochs == 0 || batch_size == 0) fail("mlp: epochs and batch_size must be >= 1");
      if (paper_mode) {
        if (hidden < 10 || hidden > 100 || hidden % 10 != 0) {
          fail("paper mode: hidden must be 10..100 in steps of 10");
        }
        if (!in_decades(mlp_l2, 1e-7, 1e5)) fail("paper mode: mlp l2 must lie in [1e-7, 1e5]");
        if (!on_step(learning_rate, 0.0, 1.0, 0.05)) {
          fail("paper mode: learning_rate must be 0.05..1 in steps of 0.05");
        }
      }
      break;
  }
}

bool ClassifierSpec::standardizes() const {
  if (standardize) return *standardize;
  return family == Family::kSVM || family == Family::kMLP;
}

double ClassifierSpec::regularization_strength() const {
  switch (family) {
    case Family::kLR:
      return 1.0 / nu1;
    case Family::kKNN:
      return static_cast<double>(neighbours);
    case Family::kSVM:
      return 1.0 / svm_c;
    case Family::kMLP:
      return mlp_l2;
  }
  return 0.0;
}

std::vector<std::pair<std::string, double>> ClassifierSpec::hyperparameters() const {
  switch (family) {
    case Family::kLR:
      return {{"nu1", nu1}, {"nu2", nu2}, {"nu3", nu3}};
    case Family::kKNN:
      return {{"kappa1", static_cast<double>(neighbours)},
              {"kappa2", static_cast<double>(leaf_size)}};
    case Family::kSVM:
      return {{"zeta1", svm_c}, {"zeta2", svm_gamma}};
    case Family::kMLP:
      return {{"xi1", static_cast<double>(hidden)}, {"xi2", mlp_l2}, {"xi3", learning_rate}};
  }
  return {};
}

std::string ClassifierSpec::describe() const {
  std::ostringstream s;
  s << to_string(family);
  for (const auto& [name, value] : hyperparameters()) s << ' ' << name << '=' << format_double(value);
  if (family == Family::kSVM) s << " kernel=" << to_string(kernel);
  return s.str();
}

Standardizer Standardizer::identity(std::size_t dim) {
  Standardizer s;
  s.mean.assign(dim, 0.0);
  s.scale.assign(dim, 1.0);
  return s;
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s = identity(x.cols());
  if (x.rows() == 0) return s;
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) s.mean[c] += x(r, c);
  }
  for (double& m : s.mean) m /= n;
  std::vector<double> var(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - s.mean[c];
      var[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < x.cols(); ++c) {
    const double sd = std::sqrt(var[c] / n);
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  std::vector<double> out(row.size());
  for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - mean[c]) / scale[c];
  return out;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
  }
  return out;
}

TrainedModel::TrainedModel(ClassifierSpec spec, std::size_t feature_dim, Standardizer scaler,
                           Params params)
    : spec_(std::move(spec)),
      feature_dim_(feature_dim),
      scaler_(std::move(scaler)),
      params_(std::move(params)) {
  if (scaler_.mean.size() != feature_dim_ || scaler_.scale.size() != feature_dim_) {
    throw std::invalid_argument("TrainedModel: scaler does not match feature_dim");
  }
}

double TrainedModel::decision_value(std::span<const double> x) const {
  if (x.size() != feature_dim_) {
    throw std::invalid_argument("predict: expected " + std::to_string(feature_dim_) +
                                " features, got " + std::to_string(x.size()));
  }
  const std::vector<double> z = scaler_.apply(x);
  if (const auto* lr = std::get_if<LrParams>(&params_)) return lr->a + dot(lr->b, z);
  if (const auto* knn = std::get_if<KnnParams>(&params_)) {
    const auto idx = knn->tree.nearest(z, spec_.neighbours);
    double tb = 0.0;
    for (std::size_t i : idx) tb += knn->labels[i];
    return tb / static_cast<double>(idx.size());
  }
  if (const auto* svm = std::get_if<SvmParams>(&params_)) {
    double f = svm->bias;
    for (std::size_t i = 0; i < svm->coef.size(); ++i) {
      f += svm->coef[i] * rbf_or_linear(spec_, svm->support.row(i), z);
    }
    return f;
  }
  const auto& mlp = std::get<MlpParams>(params_);
  double o = mlp.b2;
  for (std::size_t j = 0; j < mlp.w2.size(); ++j) {
    const double h = mlp.b1[j] + dot(mlp.w1.row(j), z);
    if (h > 0.0) o += mlp.w2[j] * h;
  }
  return o;
}

double TrainedModel::predict_proba(std::span<const double> x) const {
  const double f = decision_value(x);
  double p = 0.0;
  if (std::holds_alternative<KnnParams>(params_)) {
    p = f;
  } else if (const auto* svm = std::get_if<SvmParams>(&params_)) {
    p = sigmoid(-(svm->platt_a * f + svm->platt_b));
  } else {
    p = sigmoid(f);
  }
  if (!std::isfinite(p)) throw NumericError("classifier produced a non-finite probability");
  return std::clamp(p, 0.0, 1.0);
}

std::vector<double> TrainedModel::predict_proba(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict_proba(x.row(r));
  return out;
}

void check_training_data(const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) {
    throw std::invalid_argument("training data: " + std::to_string(x.rows()) + " rows but " +
                                std::to_string(y.size()) + " labels");
  }
  if (x.cols() == 0) throw DataError("training data has no features");
  bool seen[2] = {false, false};
  for (int label : y) {
    if (label != 0 && label != 1) throw DataError("labels must be 0 or 1");
    seen[label] = true;
  }
  if (!seen[0] || !seen[1]) throw DataError("training data must contain both classes");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DataError("training data contains a non-finite feature");
  }
}

std::vector<double> example_weights(std::span<const int> y, bool class_weights) {
  std::vector<double> w(y.size(), 1.0);
  if (!class_weights) return w;
  double count[2] = {0.0, 0.0};
  for (int label : y) count[label] += 1.0;
  const double n = static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = n / (2.0 * count[y[i]]);
  return w;
}

TrainedModel train(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec) {
  switch (spec.family) {
    case Family::kLR:
      return train_lr(x, y, spec);
    case Family::kKNN:
      return train_knn(x, y, spec);
    case Family::kSVM:
      return train_svm(x, y, spec);
    case Family::kMLP:
      return train_mlp(x, y, spec);
  }
  throw std::logic_error("unreachable classifier family");
}

}  // namespace coughscreen::classifiers
