#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coughscreen/classifiers.hpp"
#include "coughscreen/evaluation.hpp"
#include "coughscreen/feature_table.hpp"

namespace coughscreen::selection {

struct SfsStep {
  std::size_t step = 0;  // 1-based
  std::size_t feature_index = 0;
  std::string feature_name;
  double mean_auc = 0.0;
  /// Sample SD over the inner validation folds.
  double sd_auc = 0.0;
  /// Mean AUC of every candidate tried at this step, as (column, auc).
  std::vector<std::pair<std::size_t, double>> candidates;
};

struct SfsTrace {
  std::vector<SfsStep> steps;
  std::size_t best_prefix = 0;
  double best_auc = 0.0;

  /// Selected columns after `prefix` steps.
  std::vector<std::size_t> selected(std::size_t prefix) const;
};

struct SfsOptions {
  std::size_t max_features = 0;  // 0 means every feature
  /// Re-run this grid for every candidate set instead of using the fixed spec.
  std::vector<classifiers::ClassifierSpec> research_grid;
};

/// Inner validation splits used to score a feature set: the inner-A folds of
/// every outer fold.
std::vector<evaluation::Split> inner_splits(const evaluation::FoldPlan& plan);

/// Mean and sample SD of cough-level AUC of `columns` over `splits`.
std::pair<double, double> score_columns(const features::FeatureTable& table,
                                        std::span<const std::size_t> columns,
                                        std::span<const evaluation::Split> splits,
                                        const classifiers::ClassifierSpec& spec);

/// Best cell of `grid` on the full feature set, scored over the same inner
/// splits that SFS uses. Selection then runs with this spec held fixed.
classifiers::ClassifierSpec preselect(const features::FeatureTable& table,
                                      const evaluation::FoldPlan& plan,
                                      std::span<const classifiers::ClassifierSpec> grid);

/// Greedy forward selection. Candidates are scored concurrently; ties go to
/// the lowest column index.
SfsTrace sfs(const features::FeatureTable& table, const evaluation::FoldPlan& plan,
             const classifiers::ClassifierSpec& spec, const SfsOptions& options = {});

/// CSV `step,feature_name,mean_auc,sd_auc` followed by a
/// `# best_step=<k>,best_auc=<auc>` summary line.
std::string trace_csv(const SfsTrace& trace);
void write_trace(const SfsTrace& trace, const std::filesystem::path& path);

}  // namespace coughscreen::selection
