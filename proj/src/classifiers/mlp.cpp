// One-hidden-layer perceptron (ReLU hidden units, sigmoid output) trained by
// mini-batch stochastic gradient descent on the cross entropy.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "coughscreen/classifiers.hpp"

namespace coughscreen::classifiers {
namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

MlpParams zeros_like(const MlpParams& p) {
  MlpParams g;
  g.w1 = Matrix(p.w1.rows(), p.w1.cols());
  g.b1.assign(p.b1.size(), 0.0);
  g.w2.assign(p.w2.size(), 0.0);
  g.b2 = 0.0;
  return g;
}

}  // namespace

double mlp_objective(const Matrix& x, std::span<const int> y, std::span<const double> w,
                     double l2, const MlpParams& params, MlpParams* grad) {
  const std::size_t h = params.w2.size();
  if (grad) *grad = zeros_like(params);
  double wsum = 0.0;
  for (double wi : w) wsum += wi;

  std::vector<double> pre(h);
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double o = params.b2;
    for (std::size_t j = 0; j < h; ++j) {
      pre[j] = params.b1[j] + dot(params.w1.row(j), row);
      if (pre[j] > 0.0) o += params.w2[j] * pre[j];
    }
    loss += w[i] * (y[i] == 1 ? softplus(-o) : softplus(o));
    if (!grad) continue;
    const double delta = w[i] * (sigmoid(o) - static_cast<double>(y[i])) / wsum;
    grad->b2 += delta;
    for (std::size_t j = 0; j < h; ++j) {
      if (pre[j] <= 0.0) continue;
      grad->w2[j] += delta * pre[j];
      const double dh = delta * params.w2[j];
      grad->b1[j] += dh;
      auto gw = grad->w1.row(j);
      for (std::size_t c = 0; c < row.size(); ++c) gw[c] += dh * row[c];
    }
  }
  loss /= wsum;

  double norm2 = 0.0;
  for (double v : params.w1.data()) norm2 += v * v;
  for (double v : params.w2) norm2 += v * v;
  if (grad) {
    for (std::size_t k = 0; k < params.w1.data().size(); ++k) {
      grad->w1.data()[k] += l2 * params.w1.data()[k];
    }
    for (std::size_t j = 0; j < h; ++j) grad->w2[j] += l2 * params.w2[j];
  }
  return loss + 0.5 * l2 * norm2;
}

TrainedModel train_mlp(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec) {
  if (spec.family != Family::kMLP) throw std::invalid_argument("train_mlp: spec is not MLP");
  spec.validate();
  check_training_data(x, y);
  Standardizer scaler = spec.standardizes() ? Standardizer::fit(x) : Standardizer::identity(x.cols());
  const Matrix z = spec.standardizes() ? scaler.apply(x) : x;
  const std::vector<double> w = example_weights(y, spec.class_weights);
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  const std::size_t h = spec.hidden;

  std::mt19937_64 rng(spec.seed);
  MlpParams p;
  p.w1 = Matrix(h, d);
  p.b1.assign(h, 0.0);
  p.w2.assign(h, 0.0);
  const double limit1 = std::sqrt(6.0 / static_cast<double>(d + h));
  const double limit2 = std::sqrt(6.0 / static_cast<double>(h + 1));
  std::uniform_real_distribution<double> init1(-limit1, limit1);
  std::uniform_real_distribution<double> init2(-limit2, limit2);
  for (double& v : p.w1.data()) v = init1(rng);
  for (double& v : p.w2) v = init2(rng);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t batch = std::min(spec.batch_size, n);
  Matrix xb;
  std::vector<int> yb;
  std::vector<double> wb;
  MlpParams g;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      xb = Matrix(stop - start, d);
      yb.resize(stop - start);
      wb.resize(stop - start);
      for (std::size_t r = start; r < stop; ++r) {
        const auto src = z.row(order[r]);
        std::copy(src.begin(), src.end(), xb.row(r - start).begin());
        yb[r - start] = y[order[r]];
        wb[r - start] = w[order[r]];
      }
      mlp_objective(xb, yb, wb, spec.mlp_l2, p, &g);
      const double lr = spec.learning_rate;
      for (std::size_t k = 0; k < p.w1.data().size(); ++k) p.w1.data()[k] -= lr * g.w1.data()[k];
      for (std::size_t j = 0; j < h; ++j) {
        p.b1[j] -= lr * g.b1[j];
        p.w2[j] -= lr * g.w2[j];
      }
      p.b2 -= lr * g.b2;
    }
    p.final_loss = mlp_objective(z, y, w, spec.mlp_l2, p, nullptr);
    p.epochs = epoch + 1;
    if (!std::isfinite(p.final_loss)) {
      throw NumericError("mlp training diverged at epoch " + std::to_string(epoch + 1) +
                         " (" + spec.describe() + ")");
    }
  }
  return TrainedModel(spec, d, std::move(scaler), std::move(p));
}

}  // namespace coughscreen::classifiers
