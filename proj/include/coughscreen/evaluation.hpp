#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "coughscreen/classifiers.hpp"
#include "coughscreen/corpus.hpp"
#include "coughscreen/feature_table.hpp"

namespace coughscreen::evaluation {

// ---------------------------------------------------------------------------
// Fold plans

struct FoldCounts {
  std::size_t outer = 5;
  std::size_t inner_a = 4;  // hyperparameter search
  std::size_t inner_b = 2;  // threshold fitting
  void validate() const;
};

struct PatientInfo {
  std::string patient_id;
  int label = 0;
  std::optional<corpus::Sex> sex;
};

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

struct OuterFold {
  std::vector<std::string> train;
  std::vector<std::string> test;
  std::vector<Split> inner_a;
  std::vector<Split> inner_b;
};

struct FoldPlan {
  std::uint64_t seed = 0;
  FoldCounts counts;
  std::vector<OuterFold> outer;
};

/// Stratified by class (and by sex within class when known), seeded,
/// patient-disjoint at every level. Throws ConfigError when a class has too
/// few patients for the requested fold counts.
FoldPlan make_fold_plan(std::span<const PatientInfo> patients, std::uint64_t seed,
                        const FoldCounts& counts = {});

/// Patient infos for every patient present in `table`, using the corpus
/// manifest (when given) for sex.
std::vector<PatientInfo> patient_infos(const features::FeatureTable& table,
                                       const std::vector<corpus::PatientRecord>* manifest = nullptr);

// ---------------------------------------------------------------------------
// ROC machinery

struct RocPoint {
  double threshold = 0.0;  // scores >= threshold are called positive
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  /// Starts at (+inf, 0, 0); thresholds strictly decrease; ends at (1, 1).
  std::vector<RocPoint> points;
  double auc = 0.0;
};

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// Mann-Whitney pair statistic with ties counted as one half (O(n^2) oracle).
double auc_by_pairs(std::span<const double> scores, std::span<const int> labels);

struct EerPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;
};

/// Finite-threshold curve point minimising |FPR - FNR|; ties go to the lower
/// threshold.
EerPoint eer_threshold(const RocCurve& curve);

/// Largest TPR reachable at FPR <= 1 - specificity, interpolating linearly
/// towards the next curve point.
double sensitivity_at_specificity(const RocCurve& curve, double specificity);

// ---------------------------------------------------------------------------
// Patient scoring

struct CoughProbabilities {
  /// One probability per scored row: a single value for a whole-cough row,
  /// one per frame in frame mode.
  std::vector<double> values;
  /// Frames spanned by the cough.
  std::size_t frames = 1;
};

struct PatientScore {
  std::string patient_id;
  int label = 0;
  double tbi1 = 0.0;
  double tbi2 = 0.0;
  bool decision = false;
  double gamma_ee = 0.5;
  double gamma = 0.5;
  std::size_t n_coughs = 0;
  std::size_t n_frames = 0;
};

/// P-hat per cough is the mean of its values; C = P-hat >= gamma_ee;
/// TBI1 = mean C; TBI2 = frame-weighted mean probability;
/// decision = TBI1 > 0.5 or TBI2 > gamma.
PatientScore score_patient(std::span<const CoughProbabilities> coughs, double gamma_ee,
                           double gamma);

bool tb_decision(double tbi1, double tbi2, double gamma);

// ---------------------------------------------------------------------------
// Metrics

struct Confusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  /// NaN when the denominator is zero.
  double accuracy() const;
  double ppv() const;
  double npv() const;
  double sensitivity() const;
  double specificity() const;
};

Confusion confusion(std::span<const int> predicted, std::span<const int> truth);

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1); zero for fewer than two values.
double sample_sd(std::span<const double> v);

// ---------------------------------------------------------------------------
// Training bookkeeping

struct RunLogEntry {
  std::size_t outer_fold = 0;
  std::string phase;  // "inner_a", "inner_b" or "final"
  std::string model;
  std::set<std::string> train_patients;
  std::set<std::string> test_patients;
};

struct RunLog {
  std::vector<RunLogEntry> entries;
  std::string to_text() const;
};

class LeakageError : public DataError {
 public:
  using DataError::DataError;
};

/// Throws LeakageError when any entry trains and tests on a shared patient.
void audit(const RunLog& log);

/// Patient-disjoint train/score helper shared by evaluation and selection:
/// fits on rows of `train`, returns per-cough P-hat for rows of `test`, and
/// appends the patient sets actually used to `entry`.
struct CoughScores {
  std::vector<std::string> cough_ids;
  std::vector<std::string> patient_ids;
  std::vector<int> labels;
  std::vector<double> p_hat;
  std::vector<CoughProbabilities> probabilities;
};

CoughScores fit_and_score(const features::FeatureTable& table,
                          const std::vector<std::string>& train,
                          const std::vector<std::string>& test,
                          const classifiers::ClassifierSpec& spec, RunLogEntry* entry);

/// Groups prediction rows into coughs (first-appearance order).
CoughScores group_coughs(const features::FeatureTable& rows, std::span<const double> probs);

// ---------------------------------------------------------------------------
// Grids and nested cross-validation

/// Free-mode default search space of a family (small, desk-scale).
std::vector<classifiers::ClassifierSpec> default_grid(const classifiers::ClassifierSpec& base);
/// The published search space of a family.
std::vector<classifiers::ClassifierSpec> paper_grid(const classifiers::ClassifierSpec& base);

struct GridResult {
  std::size_t best = 0;
  /// Mean inner cough-level AUC per cell; NaN for cells that failed to train.
  std::vector<double> mean_auc;
  std::vector<std::string> errors;
};

/// Picks the cell with the highest mean AUC; ties go to the more strongly
/// regularised cell, then to the earlier one. Throws the first cell's error
/// when every cell failed.
std::size_t select_best(std::span<const classifiers::ClassifierSpec> grid,
                        std::span<const double> mean_auc,
                        std::span<const std::string> errors);

GridResult grid_search(const features::FeatureTable& table, std::span<const Split> folds,
                       std::span<const classifiers::ClassifierSpec> grid, RunLog* log = nullptr,
                       std::size_t outer_fold = 0);

struct EvaluationConfig {
  FoldCounts folds;
  std::uint64_t seed = 7;
  /// Decision threshold on TBI2; defaults to each fold's gamma_ee.
  std::optional<double> gamma;
  std::vector<double> specificities = {0.70, 0.95};
};

struct FoldResult {
  std::size_t fold = 0;
  classifiers::ClassifierSpec best;
  double best_inner_auc = 0.0;
  std::vector<double> cell_auc;
  double gamma_ee = 0.5;
  double gamma = 0.5;
  std::vector<PatientScore> patients;
  RocCurve patient_roc;
  double auc = 0.0;
  CoughScores coughs;
  RocCurve cough_roc;
};

struct MetricsReport {
  classifiers::Family family = classifiers::Family::kLR;
  std::vector<FoldResult> folds;
  double auc_mean = 0.0;
  double auc_sd = 0.0;
  Confusion patient_confusion;
  Confusion cough_confusion;
  RocCurve pooled_patient_roc;
  RocCurve pooled_cough_roc;
  std::vector<std::pair<double, double>> sensitivity_at;  // (specificity, sensitivity)
  std::string modal_spec;
  std::vector<classifiers::ClassifierSpec> grid;
};

struct EvaluationResult {
  FoldPlan plan;
  MetricsReport report;
  RunLog log;
};

/// Full nested cross-validation: inner-A grid search, inner-B threshold,
/// retrain on the outer-training patients and score the outer-test patients.
/// The run log is audited before returning.
EvaluationResult evaluate_outer(const features::FeatureTable& table, const FoldPlan& plan,
                                std::span<const classifiers::ClassifierSpec> grid,
                                const EvaluationConfig& config);

/// Writes metrics.json, roc_patient.csv, roc_cough.csv, roc_fold<k>.csv,
/// patient_scores.csv and run_log.txt into `dir`.
void write_outputs(const EvaluationResult& result, const std::filesystem::path& dir);

std::string metrics_json(const EvaluationResult& result);
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);
RocCurve read_roc_csv(const std::filesystem::path& path);

}  // namespace coughscreen::evaluation
