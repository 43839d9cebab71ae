#include "coughscreen/selection.hpp"

#include <fstream>
#include <sstream>

#include "coughscreen/parallel.hpp"

namespace coughscreen::selection {

using evaluation::Split;

std::vector<std::size_t> SfsTrace::selected(std::size_t prefix) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < prefix && i < steps.size(); ++i) {
    out.push_back(steps[i].feature_index);
  }
  return out;
}

std::vector<Split> inner_splits(const evaluation::FoldPlan& plan) {
  std::vector<Split> out;
  for (const auto& o : plan.outer) out.insert(out.end(), o.inner_a.begin(), o.inner_a.end());
  return out;
}

classifiers::ClassifierSpec preselect(const features::FeatureTable& table,
                                      const evaluation::FoldPlan& plan,
                                      std::span<const classifiers::ClassifierSpec> grid) {
  if (grid.empty()) throw ConfigError("sfs: empty hyperparameter grid");
  const std::vector<Split> splits = inner_splits(plan);
  if (splits.empty()) throw ConfigError("sfs: fold plan has no inner folds");
  const auto result = evaluation::grid_search(table, splits, grid);
  return grid[result.best];
}

std::pair<double, double> score_columns(const features::FeatureTable& table,
                                        std::span<const std::size_t> columns,
                                        std::span<const Split> splits,
                                        const classifiers::ClassifierSpec& spec) {
  const features::FeatureTable sub = table.select_columns(columns);
  std::vector<double> aucs;
  aucs.reserve(splits.size());
  for (const auto& s : splits) {
    const auto scores = evaluation::fit_and_score(sub, s.train, s.test, spec, nullptr);
    aucs.push_back(evaluation::roc_curve(scores.p_hat, scores.labels).auc);
  }
  return {evaluation::mean(aucs), evaluation::sample_sd(aucs)};
}

SfsTrace sfs(const features::FeatureTable& table, const evaluation::FoldPlan& plan,
             const classifiers::ClassifierSpec& spec, const SfsOptions& options) {
  table.validate();
  const std::size_t d = table.dimension();
  if (d < 2) throw ConfigError("sfs needs at least 2 candidate features");
  const std::size_t limit = options.max_features == 0 ? d : std::min(options.max_features, d);
  const std::vector<Split> splits = inner_splits(plan);
  if (splits.empty()) throw ConfigError("sfs: fold plan has no inner folds");

  auto evaluate = [&](std::span<const std::size_t> columns) -> std::pair<double, double> {
    if (options.research_grid.empty()) return score_columns(table, columns, splits, spec);
    std::pair<double, double> best{-1.0, 0.0};
    for (const auto& cell : options.research_grid) {
      const auto r = score_columns(table, columns, splits, cell);
      if (r.first > best.first) best = r;
    }
    return best;
  };

  SfsTrace trace;
  std::vector<std::size_t> chosen;
  std::vector<bool> used(d, false);
  for (std::size_t step = 1; step <= limit; ++step) {
    std::vector<std::size_t> remaining;
    for (std::size_t c = 0; c < d; ++c) {
      if (!used[c]) remaining.push_back(c);
    }
    std::vector<std::pair<double, double>> scores(remaining.size());
    parallel_for(remaining.size(), [&](std::size_t i) {
      std::vector<std::size_t> columns = chosen;
      columns.push_back(remaining[i]);
      scores[i] = evaluate(columns);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < remaining.size(); ++i) {
      if (scores[i].first > scores[best].first) best = i;
    }
    SfsStep s;
    s.step = step;
    s.feature_index = remaining[best];
    s.feature_name = table.names[remaining[best]];
    s.mean_auc = scores[best].first;
    s.sd_auc = scores[best].second;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      s.candidates.emplace_back(remaining[i], scores[i].first);
    }
    used[remaining[best]] = true;
    chosen.push_back(remaining[best]);
    if (trace.steps.empty() || s.mean_auc > trace.best_auc) {
      trace.best_auc = s.mean_auc;
      trace.best_prefix = step;
    }
    trace.steps.push_back(std::move(s));
  }
  return trace;
}

std::string trace_csv(const SfsTrace& trace) {
  std::ostringstream s;
  s << "step,feature_name,mean_auc,sd_auc\n";
  for (const auto& st : trace.steps) {
    s << st.step << ',' << st.feature_name << ',' << format_double(st.mean_auc) << ','
      << format_double(st.sd_auc) << '\n';
  }
  s << "# best_step=" << trace.best_prefix << ",best_auc=" << format_double(trace.best_auc)
    << '\n';
  return s.str();
}

void write_trace(const SfsTrace& trace, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << trace_csv(trace);
  if (!f) throw DataError("failed writing " + path.string());
}

}  // namespace coughscreen::selection
