// Elastic-net logistic regression trained by full-batch (sub)gradient descent
// with a backtracking line search. Only accepted steps that lower the
// objective are taken, so the recorded loss trace never increases.

#include <algorithm>
#include <cmath>

#include "coughscreen/classifiers.hpp"

namespace coughscreen::classifiers {
namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

}  // namespace

double lr_objective(const Matrix& x, std::span<const int> y, std::span<const double> w,
                    const ClassifierSpec& spec, double a, std::span<const double> b,
                    double* grad_a, std::vector<double>* grad_b) {
  const std::size_t d = x.cols();
  double wsum = 0.0;
  for (double wi : w) wsum += wi;
  if (grad_a) *grad_a = 0.0;
  if (grad_b) grad_b->assign(d, 0.0);

  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double z = a + dot(b, row);
    // -log P(y | x) = softplus(-z) for y = 1, softplus(z) for y = 0.
    loss += w[i] * (y[i] == 1 ? softplus(-z) : softplus(z));
    if (grad_a || grad_b) {
      const double r = w[i] * (sigmoid(z) - static_cast<double>(y[i])) / wsum;
      if (grad_a) *grad_a += r;
      if (grad_b) {
        for (std::size_t k = 0; k < d; ++k) (*grad_b)[k] += r * row[k];
      }
    }
  }
  loss /= wsum;

  const double lambda = 1.0 / spec.nu1;
  double l1 = 0.0;
  double l2 = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    l1 += std::abs(b[k]);
    l2 += b[k] * b[k];
    if (grad_b) (*grad_b)[k] += lambda * (spec.nu2 * sign(b[k]) + 2.0 * spec.nu3 * b[k]);
  }
  return loss + lambda * (spec.nu2 * l1 + spec.nu3 * l2);
}

TrainedModel train_lr(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec) {
  if (spec.family != Family::kLR) throw std::invalid_argument("train_lr: spec is not LR");
  spec.validate();
  check_training_data(x, y);
  Standardizer scaler = spec.standardizes() ? Standardizer::fit(x) : Standardizer::identity(x.cols());
  const Matrix z = spec.standardizes() ? scaler.apply(x) : x;
  const std::vector<double> w = example_weights(y, spec.class_weights);
  const std::size_t d = x.cols();

  LrParams p;
  p.b.assign(d, 0.0);
  double ga = 0.0;
  std::vector<double> gb;
  double f = lr_objective(z, y, w, spec, p.a, p.b, &ga, &gb);
  p.loss_trace.push_back(f);

  double step = 1.0;
  std::vector<double> b_new(d);
  double ga_new = 0.0;
  std::vector<double> gb_new;
  for (std::size_t it = 0; it < spec.lr_max_iterations; ++it) {
    double gnorm2 = ga * ga;
    for (double g : gb) gnorm2 += g * g;
    if (gnorm2 == 0.0) break;

    bool accepted = false;
    double a_new = 0.0;
    double f_new = 0.0;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      a_new = p.a - step * ga;
      for (std::size_t k = 0; k < d; ++k) b_new[k] = p.b[k] - step * gb[k];
      f_new = lr_objective(z, y, w, spec, a_new, b_new, &ga_new, &gb_new);
      if (std::isfinite(f_new) && f_new <= f - kArmijo * step * gnorm2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double change = f - f_new;
    p.a = a_new;
    p.b.swap(b_new);
    ga = ga_new;
    gb.swap(gb_new);
    f = f_new;
    p.loss_trace.push_back(f);
    p.iterations = it + 1;
    if (change < spec.lr_tolerance) break;
    step = std::min(step * 2.0, 1e6);
  }
  if (!std::isfinite(f)) throw NumericError("logistic regression objective is not finite");
  p.final_loss = f;
  return TrainedModel(spec, d, std::move(scaler), std::move(p));
}

}  // namespace coughscreen::classifiers
