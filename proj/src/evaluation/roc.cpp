#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coughscreen/evaluation.hpp"

namespace coughscreen::evaluation {
namespace {

void check_scores(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("ROC: scores and labels differ in length");
  }
  bool seen[2] = {false, false};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("ROC: labels must be 0 or 1");
    if (std::isnan(scores[i])) throw DataError("ROC: score is NaN");
    seen[labels[i]] = true;
  }
  if (!seen[0] || !seen[1]) throw DataError("ROC needs both positive and negative examples");
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double pos = 0.0;
  for (int l : labels) pos += l;
  const double neg = static_cast<double>(n) - pos;

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < n;) {
    const double s = scores[order[i]];
    while (i < n && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1.0;
      ++i;
    }
    curve.points.push_back({s, fp / neg, tp / pos});
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    curve.auc += (b.fpr - a.fpr) * (b.tpr + a.tpr) / 2.0;
  }
  return curve;
}

double auc_by_pairs(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  double concordant = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) concordant += 1.0;
      else if (scores[i] == scores[j]) concordant += 0.5;
    }
  }
  return concordant / pairs;
}

EerPoint eer_threshold(const RocCurve& curve) {
  EerPoint best;
  double best_gap = std::numeric_limits<double>::infinity();
  // Thresholds decrease along the curve, so "<=" keeps the lowest on ties.
  for (const auto& p : curve.points) {
    if (!std::isfinite(p.threshold)) continue;
    const double fnr = 1.0 - p.tpr;
    const double gap = std::abs(p.fpr - fnr);
    if (gap <= best_gap) {
      best_gap = gap;
      best = {p.threshold, p.fpr, fnr};
    }
  }
  if (!std::isfinite(best_gap)) throw DataError("EER: curve has no finite threshold");
  return best;
}

double sensitivity_at_specificity(const RocCurve& curve, double specificity) {
  if (!(specificity >= 0.0 && specificity <= 1.0)) {
    throw std::invalid_argument("specificity must lie in [0, 1]");
  }
  const double max_fpr = 1.0 - specificity;
  double best = 0.0;
  std::ptrdiff_t last = -1;
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    if (curve.points[k].fpr <= max_fpr) {
      best = std::max(best, curve.points[k].tpr);
      last = static_cast<std::ptrdiff_t>(k);
    }
  }
  const auto next = static_cast<std::size_t>(last + 1);
  if (last >= 0 && next < curve.points.size()) {
    const auto& a = curve.points[static_cast<std::size_t>(last)];
    const auto& b = curve.points[next];
    if (b.fpr > a.fpr) {
      best = std::max(best, a.tpr + (b.tpr - a.tpr) * (max_fpr - a.fpr) / (b.fpr - a.fpr));
    }
  }
  return best;
}

}  // namespace coughscreen::evaluation
