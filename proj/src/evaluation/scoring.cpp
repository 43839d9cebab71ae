#include <cmath>
#include <limits>
#include <numeric>

#include "coughscreen/evaluation.hpp"

namespace coughscreen::evaluation {
namespace {

double ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

bool tb_decision(double tbi1, double tbi2, double gamma) { return tbi1 > 0.5 || tbi2 > gamma; }

PatientScore score_patient(std::span<const CoughProbabilities> coughs, double gamma_ee,
                           double gamma) {
  if (coughs.empty()) throw DataError("score_patient: patient has no coughs");
  PatientScore s;
  s.gamma_ee = gamma_ee;
  s.gamma = gamma;
  s.n_coughs = coughs.size();
  double positive = 0.0;
  double weighted = 0.0;
  for (const auto& c : coughs) {
    if (c.values.empty() || c.frames == 0) {
      throw DataError("score_patient: cough without probabilities or frames");
    }
    const double p_hat = std::accumulate(c.values.begin(), c.values.end(), 0.0) /
                         static_cast<double>(c.values.size());
    if (p_hat >= gamma_ee) positive += 1.0;
    // Each scored row stands for frames / rows frames of the cough.
    const double per_row = static_cast<double>(c.frames) / static_cast<double>(c.values.size());
    for (double p : c.values) weighted += per_row * p;
    s.n_frames += c.frames;
  }
  s.tbi1 = positive / static_cast<double>(s.n_coughs);
  s.tbi2 = weighted / static_cast<double>(s.n_frames);
  s.decision = tb_decision(s.tbi1, s.tbi2, gamma);
  return s;
}

double Confusion::accuracy() const { return ratio(tp + tn, total()); }
double Confusion::ppv() const { return ratio(tp, tp + fp); }
double Confusion::npv() const { return ratio(tn, tn + fn); }
double Confusion::sensitivity() const { return ratio(tp, tp + fn); }
double Confusion::specificity() const { return ratio(tn, tn + fp); }

Confusion confusion(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("confusion: length mismatch");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double mean(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace coughscreen::evaluation
