// Soft-margin SVM: the dual is solved by sequential minimal optimisation with
// second-order working-set selection (Fan, Chen and Lin 2005). Per-example
// box constraints C_i = C * w_i carry the class weights.

#include <algorithm>
#include <cmath>
#include <limits>

#include "coughscreen/classifiers.hpp"

namespace coughscreen::classifiers {
namespace {

constexpr double kTau = 1e-12;

double kernel_value(const ClassifierSpec& spec, std::span<const double> a,
                    std::span<const double> b) {
  if (spec.kernel == Kernel::kLinear) return dot(a, b);
  return std::exp(-spec.svm_gamma * squared_distance(a, b));
}

struct Solution {
  std::vector<double> alpha;
  double rho = 0.0;
  std::size_t iterations = 0;
};

Solution solve_dual(const Matrix& k, std::span<const double> y, std::span<const double> c,
                    double eps) {
  const std::size_t n = y.size();
  Solution s;
  s.alpha.assign(n, 0.0);
  std::vector<double> g(n, -1.0);
  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(i, j); };
  auto is_upper = [&](std::size_t t) { return s.alpha[t] >= c[t]; };
  auto is_lower = [&](std::size_t t) { return s.alpha[t] <= 0.0; };

  const std::size_t max_iter = std::max<std::size_t>(10000000, 100 * n);
  while (s.iterations < max_iter) {
    // Working set selection.
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0) {
        if (!is_upper(t) && -g[t] >= gmax) {
          gmax = -g[t];
          i = static_cast<std::ptrdiff_t>(t);
        }
      } else if (!is_lower(t) && g[t] >= gmax) {
        gmax = g[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (i < 0) break;
    const auto ui = static_cast<std::size_t>(i);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    for (std::size_t t = 0; t < n; ++t) {
      double grad_diff = 0.0;
      if (y[t] > 0) {
        if (is_lower(t)) continue;
        gmax2 = std::max(gmax2, g[t]);
        grad_diff = gmax + g[t];
      } else {
        if (is_upper(t)) continue;
        gmax2 = std::max(gmax2, -g[t]);
        grad_diff = gmax - g[t];
      }
      if (grad_diff > 0.0) {
        double quad = k(ui, ui) + k(t, t) - 2.0 * k(ui, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(grad_diff * grad_diff) / quad;
        if (obj <= obj_min) {
          obj_min = obj;
          j = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    if (gmax + gmax2 < eps || j < 0) break;
    const auto uj = static_cast<std::size_t>(j);
    ++s.iterations;

    // Two-variable update, clipped to the box.
    const double old_i = s.alpha[ui];
    const double old_j = s.alpha[uj];
    double& ai = s.alpha[ui];
    double& aj = s.alpha[uj];
    const double ci = c[ui];
    const double cj = c[uj];
    if (y[ui] != y[uj]) {
      double quad = k(ui, ui) + k(uj, uj) + 2.0 * q(ui, uj);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-g[ui] - g[uj]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > ci - cj) {
        if (ai > ci) {
          ai = ci;
          aj = ci - diff;
        }
      } else if (aj > cj) {
        aj = cj;
        ai = cj + diff;
      }
    } else {
      double quad = k(ui, ui) + k(uj, uj) - 2.0 * q(ui, uj);
      if (quad <= 0.0) quad = kTau;
      const double delta = (g[ui] - g[uj]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) {
          ai = ci;
          aj = sum - ci;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > cj) {
        if (aj > cj) {
          aj = cj;
          ai = sum - cj;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    for (std::size_t t = 0; t < n; ++t) g[t] += q(ui, t) * di + q(uj, t) * dj;
  }

  // Offset from the free variables, or the midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * g[t];
    if (is_upper(t)) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (is_lower(t)) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  s.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  return s;
}

}  // namespace

std::pair<double, double> fit_platt(std::span<const double> decision, std::span<const int> y) {
  const std::size_t n = decision.size();
  double prior1 = 0.0;
  double prior0 = 0.0;
  for (int label : y) (label == 1 ? prior1 : prior0) += 1.0;
  const double hi = (prior1 + 1.0) / (prior1 + 2.0);
  const double lo = 1.0 / (prior0 + 2.0);
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] == 1 ? hi : lo;

  auto objective = [&](double a, double b) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decision[i] * a + b;
      f += z >= 0.0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };

  double a = 0.0;
  double b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  double fval = objective(a, b);
  constexpr double kSigma = 1e-12;
  for (int iter = 0; iter < 100; ++iter) {
    double h11 = kSigma;
    double h22 = kSigma;
    double h21 = 0.0;
    double g1 = 0.0;
    double g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = decision[i] * a + b;
      double p = 0.0;
      double q = 0.0;
      if (z >= 0.0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += decision[i] * decision[i] * d2;
      h22 += d2;
      h21 += decision[i] * d2;
      const double d1 = t[i] - p;
      g1 += decision[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= 1e-10) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < 1e-10) break;
  }
  return {a, b};
}

TrainedModel train_svm(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec) {
  if (spec.family != Family::kSVM) throw std::invalid_argument("train_svm: spec is not SVM");
  spec.validate();
  check_training_data(x, y);
  Standardizer scaler = spec.standardizes() ? Standardizer::fit(x) : Standardizer::identity(x.cols());
  const Matrix z = spec.standardizes() ? scaler.apply(x) : x;
  const std::size_t n = z.rows();

  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      k(i, j) = kernel_value(spec, z.row(i), z.row(j));
      k(j, i) = k(i, j);
    }
  }
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[i] == 1 ? 1.0 : -1.0;
  std::vector<double> c = example_weights(y, spec.class_weights);
  for (double& ci : c) ci *= spec.svm_c;

  const Solution sol = solve_dual(k, ys, c, spec.svm_tolerance);

  SvmParams p;
  p.bias = -sol.rho;
  p.iterations = sol.iterations;
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.alpha[i] > 0.0) support.push_back(i);
  }
  p.support = Matrix(support.size(), z.cols());
  for (std::size_t s = 0; s < support.size(); ++s) {
    const auto src = z.row(support[s]);
    std::copy(src.begin(), src.end(), p.support.row(s).begin());
    p.coef.push_back(sol.alpha[support[s]] * ys[support[s]]);
  }

  std::vector<double> decision(n, p.bias);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < support.size(); ++s) decision[i] += p.coef[s] * k(support[s], i);
    if (!std::isfinite(decision[i])) throw NumericError("svm decision value is not finite");
  }
  std::tie(p.platt_a, p.platt_b) = fit_platt(decision, y);
  return TrainedModel(spec, x.cols(), std::move(scaler), std::move(p));
}

}  // namespace coughscreen::classifiers
