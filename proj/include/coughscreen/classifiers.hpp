#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "coughscreen/common.hpp"

namespace coughscreen::classifiers {

enum class Family { kLR, kKNN, kSVM, kMLP };
enum class Kernel { kLinear, kRbf };

std::string to_string(Family family);
Family parse_family(const std::string& name);
std::string to_string(Kernel kernel);
Kernel parse_kernel(const std::string& name);

struct ClassifierSpec {
  Family family = Family::kLR;

  // Logistic regression. The penalty weight is 1 / nu1, split nu2 : nu3
  // between the l1 and squared l2 norms of the coefficients.
  double nu1 = 1.0;
  double nu2 = 0.5;
  double nu3 = 0.5;
  double lr_tolerance = 1e-7;
  std::size_t lr_max_iterations = 10000;

  // k nearest neighbours. leaf_size only shapes the search tree.
  std::size_t neighbours = 10;
  std::size_t leaf_size = 30;

  // Support vector machine: C and the RBF gamma.
  double svm_c = 1.0;
  double svm_gamma = 0.1;
  Kernel kernel = Kernel::kRbf;
  double svm_tolerance = 1e-4;

  // Multilayer perceptron.
  std::size_t hidden = 10;
  double mlp_l2 = 1e-4;
  double learning_rate = 0.05;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;

  std::uint64_t seed = 1;
  /// Per-fold z-scoring. Unset means the family default (on for SVM and MLP).
  std::optional<bool> standardize;
  /// Inverse class frequency example weights n / (2 n_c).
  bool class_weights = false;
  /// Rejects values outside the published search ranges.
  bool paper_mode = false;

  void validate() const;
  bool standardizes() const;
  /// Larger means a smoother, more constrained model; used to break grid ties.
  double regularization_strength() const;
  /// The searched hyperparameters of this family as (symbol, value).
  std::vector<std::pair<std::string, double>> hyperparameters() const;
  std::string describe() const;
};

/// Per-column z-scoring fitted on training rows only. Columns with zero
/// spread are centred but not scaled.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer identity(std::size_t dim);
  static Standardizer fit(const Matrix& x);
  std::vector<double> apply(std::span<const double> row) const;
  Matrix apply(const Matrix& x) const;
};

struct LrParams {
  double a = 0.0;
  std::vector<double> b;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  /// Objective after every accepted step, starting with the initial point.
  std::vector<double> loss_trace;
};

/// Exact k-nearest-neighbour search tree over an owned point set.
class KdTree {
 public:
  KdTree() = default;
  KdTree(Matrix points, std::size_t leaf_size);

  const Matrix& points() const { return points_; }
  std::size_t leaf_size() const { return leaf_size_; }
  /// Indices of the k nearest points ordered by (squared distance, index).
  std::vector<std::size_t> nearest(std::span<const double> query, std::size_t k) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t axis = 0;
    double split = 0.0;
    int left = -1;
    int right = -1;
  };
  int build(std::size_t begin, std::size_t end);

  Matrix points_;
  std::size_t leaf_size_ = 1;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

struct KnnParams {
  KdTree tree;
  std::vector<int> labels;
};

struct SvmParams {
  Matrix support;
  /// alpha_i * y_i for each support vector, y in {-1, +1}.
  std::vector<double> coef;
  double bias = 0.0;
  /// P(TB | f) = 1 / (1 + exp(platt_a * f + platt_b)).
  double platt_a = -1.0;
  double platt_b = 0.0;
  std::size_t iterations = 0;
};

struct MlpParams {
  Matrix w1;  // hidden x input
  std::vector<double> b1;
  std::vector<double> w2;  // hidden
  double b2 = 0.0;
  std::size_t epochs = 0;
  double final_loss = 0.0;
};

class TrainedModel {
 public:
  using Params = std::variant<LrParams, KnnParams, SvmParams, MlpParams>;

  TrainedModel(ClassifierSpec spec, std::size_t feature_dim, Standardizer scaler, Params params);

  const ClassifierSpec& spec() const { return spec_; }
  std::size_t feature_dim() const { return feature_dim_; }
  const Standardizer& scaler() const { return scaler_; }
  const Params& params() const { return params_; }

  /// Probability of the TB class; throws std::invalid_argument on a
  /// dimension mismatch.
  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Matrix& x) const;
  /// Raw family score before the probability map (logit, SVM margin, ...).
  double decision_value(std::span<const double> x) const;

 private:
  ClassifierSpec spec_;
  std::size_t feature_dim_;
  Standardizer scaler_;
  Params params_;
};

/// Checks shapes, finiteness and that both classes (0 and 1) occur.
void check_training_data(const Matrix& x, std::span<const int> y);

/// Per-example weights: all ones, or n / (2 n_c) when enabled.
std::vector<double> example_weights(std::span<const int> y, bool class_weights);

TrainedModel train(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec);
TrainedModel train_lr(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec);
TrainedModel train_knn(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec);
TrainedModel train_svm(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec);
TrainedModel train_mlp(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec);

/// LR objective: weighted mean logistic loss plus the elastic-net penalty
/// (1/nu1) (nu2 |b|_1 + nu3 |b|^2). Gradients use sign(0) = 0 for the l1 term.
double lr_objective(const Matrix& x, std::span<const int> y, std::span<const double> w,
                    const ClassifierSpec& spec, double a, std::span<const double> b,
                    double* grad_a, std::vector<double>* grad_b);

/// MLP objective on a batch: weighted mean cross entropy plus (l2 / 2) times
/// the squared norm of both weight layers. Fills `grad` (same shape as
/// `params`) when non-null.
double mlp_objective(const Matrix& x, std::span<const int> y, std::span<const double> w,
                     double l2, const MlpParams& params, MlpParams* grad);

/// Platt sigmoid fit (A, B) on decision values with Newton's method and
/// prior-smoothed targets.
std::pair<double, double> fit_platt(std::span<const double> decision, std::span<const int> y);

/// Versioned JSON text serialisation.
std::string to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

}  // namespace coughscreen::classifiers
