#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <sstream>

#include "coughscreen/evaluation.hpp"
#include "coughscreen/parallel.hpp"

namespace coughscreen::evaluation {

using classifiers::ClassifierSpec;
using classifiers::Family;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> decades(int lo, int hi) {
  std::vector<double> out;
  for (int e = lo; e <= hi; ++e) out.push_back(std::pow(10.0, e));
  return out;
}

std::vector<double> steps(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<int>(std::llround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e9) / 1e9);
  return out;
}

std::vector<ClassifierSpec> product(const ClassifierSpec& base, const std::vector<double>& a,
                                    const std::vector<double>& b, const std::vector<double>& c) {
  std::vector<ClassifierSpec> grid;
  for (double x : a) {
    for (double y : b) {
      for (double z : c) {
        ClassifierSpec s = base;
        switch (base.family) {
          case Family::kLR:
            s.nu1 = x;
            s.nu2 = y;
            s.nu3 = std::round((1.0 - y) * 1e9) / 1e9;
            break;
          case Family::kKNN:
            s.neighbours = static_cast<std::size_t>(x);
            s.leaf_size = static_cast<std::size_t>(y);
            break;
          case Family::kSVM:
            s.svm_c = x;
            s.svm_gamma = y;
            break;
          case Family::kMLP:
            s.hidden = static_cast<std::size_t>(x);
            s.mlp_l2 = y;
            s.learning_rate = z;
            break;
        }
        grid.push_back(s);
      }
    }
  }
  return grid;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

}  // namespace

std::vector<ClassifierSpec> default_grid(const ClassifierSpec& base) {
  switch (base.family) {
    case Family::kLR:
      return product(base, decades(-2, 2), {0.15, 0.5, 0.85}, {0.0});
    case Family::kKNN:
      return product(base, {5, 10, 20}, {10, 30}, {0.0});
    case Family::kSVM:
      return product(base, {0.1, 1.0, 10.0}, {1e-3, 1e-2, 1e-1}, {0.0});
    case Family::kMLP:
      return product(base, {10, 20}, {1e-4, 1e-2}, {0.05});
  }
  return {};
}

std::vector<ClassifierSpec> paper_grid(const ClassifierSpec& base) {
  ClassifierSpec b = base;
  b.paper_mode = true;
  switch (base.family) {
    case Family::kLR:
      return product(b, decades(-7, 7), steps(0.0, 1.0, 0.05), {0.0});
    case Family::kKNN:
      return product(b, steps(10, 100, 10), steps(5, 30, 5), {0.0});
    case Family::kSVM:
      return product(b, decades(-7, 7), decades(-7, 7), {0.0});
    case Family::kMLP:
      return product(b, steps(10, 100, 10), decades(-7, 5), steps(0.05, 1.0, 0.05));
  }
  return {};
}

CoughScores group_coughs(const features::FeatureTable& rows, std::span<const double> probs) {
  if (probs.size() != rows.rows()) throw std::invalid_argument("group_coughs: length mismatch");
  CoughScores out;
  std::map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto [it, inserted] = index.emplace(rows.cough_ids[r], out.cough_ids.size());
    if (inserted) {
      out.cough_ids.push_back(rows.cough_ids[r]);
      out.patient_ids.push_back(rows.patient_ids[r]);
      out.labels.push_back(rows.labels[r]);
      out.probabilities.push_back({{}, 0});
    }
    auto& c = out.probabilities[it->second];
    c.values.push_back(probs[r]);
    c.frames += rows.frames[r];
  }
  for (const auto& c : out.probabilities) {
    double s = 0.0;
    for (double v : c.values) s += v;
    out.p_hat.push_back(s / static_cast<double>(c.values.size()));
  }
  return out;
}

CoughScores fit_and_score(const features::FeatureTable& table,
                          const std::vector<std::string>& train,
                          const std::vector<std::string>& test, const ClassifierSpec& spec,
                          RunLogEntry* entry) {
  const features::FeatureTable train_rows = table.select_patients(as_set(train));
  const features::FeatureTable test_rows = table.select_patients(as_set(test));
  if (entry) {
    entry->model = spec.describe();
    entry->train_patients = as_set(train_rows.patient_ids);
    entry->test_patients = as_set(test_rows.patient_ids);
  }
  if (test_rows.rows() == 0) throw DataError("evaluation split has no test rows");
  const classifiers::TrainedModel model =
      classifiers::train(train_rows.values, train_rows.labels, spec);
  return group_coughs(test_rows, model.predict_proba(test_rows.values));
}

std::string RunLog::to_text() const {
  std::ostringstream s;
  for (const auto& e : entries) {
    s << "fold=" << e.outer_fold + 1 << " phase=" << e.phase << " model=" << e.model << '\n';
    s << "  train:";
    for (const auto& p : e.train_patients) s << ' ' << p;
    s << "\n  test:";
    for (const auto& p : e.test_patients) s << ' ' << p;
    s << '\n';
  }
  return s.str();
}

void audit(const RunLog& log) {
  for (const auto& e : log.entries) {
    for (const auto& p : e.test_patients) {
      if (e.train_patients.count(p)) {
        throw LeakageError("leakage: patient " + p + " is in both the training and test set of " +
                           e.phase + " (outer fold " + std::to_string(e.outer_fold + 1) + ")");
      }
    }
  }
}

std::size_t select_best(std::span<const ClassifierSpec> grid, std::span<const double> mean_auc,
                        std::span<const std::string> errors) {
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if ((i < errors.size() && !errors[i].empty()) || std::isnan(mean_auc[i])) continue;
    if (best < 0) {
      best = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    const auto b = static_cast<std::size_t>(best);
    if (mean_auc[i] > mean_auc[b] ||
        (mean_auc[i] == mean_auc[b] &&
         grid[i].regularization_strength() > grid[b].regularization_strength())) {
      best = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best < 0) {
    std::string first;
    for (const auto& e : errors) {
      if (!e.empty()) {
        first = e;
        break;
      }
    }
    throw DataError("every grid cell failed to train" + (first.empty() ? "" : ": " + first));
  }
  return static_cast<std::size_t>(best);
}

namespace {

struct CellFold {
  double auc = kNaN;
  std::exception_ptr error;
  std::string message;
  RunLogEntry entry;
};

// Evaluates one (cell, inner fold) pair, recording rather than throwing
// library errors so one bad cell does not abort the search.
CellFold run_cell_fold(const features::FeatureTable& table, const Split& split,
                       const ClassifierSpec& spec, std::size_t outer) {
  CellFold r;
  r.entry.outer_fold = outer;
  r.entry.phase = "inner_a";
  try {
    const CoughScores s = fit_and_score(table, split.train, split.test, spec, &r.entry);
    r.auc = roc_curve(s.p_hat, s.labels).auc;
  } catch (const Error& e) {
    r.error = std::current_exception();
    r.message = e.what();
  }
  return r;
}

GridResult reduce_cells(std::span<const ClassifierSpec> grid, std::span<const CellFold> results,
                        std::size_t n_folds) {
  GridResult g;
  std::exception_ptr first;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    std::vector<double> aucs;
    std::string message;
    for (std::size_t f = 0; f < n_folds; ++f) {
      const CellFold& r = results[c * n_folds + f];
      if (r.error) {
        if (!first) first = r.error;
        if (message.empty()) message = r.message;
      } else {
        aucs.push_back(r.auc);
      }
    }
    g.mean_auc.push_back(message.empty() ? mean(aucs) : kNaN);
    g.errors.push_back(message);
  }
  const bool any_ok =
      std::any_of(g.errors.begin(), g.errors.end(), [](const auto& e) { return e.empty(); });
  if (!any_ok && first) std::rethrow_exception(first);
  g.best = select_best(grid, g.mean_auc, g.errors);
  return g;
}

}  // namespace

GridResult grid_search(const features::FeatureTable& table, std::span<const Split> folds,
                       std::span<const ClassifierSpec> grid, RunLog* log,
                       std::size_t outer_fold) {
  if (grid.empty()) throw ConfigError("grid search needs at least one cell");
  if (folds.empty()) throw ConfigError("grid search needs at least one fold");
  std::vector<CellFold> results(grid.size() * folds.size());
  parallel_for(results.size(), [&](std::size_t t) {
    results[t] = run_cell_fold(table, folds[t % folds.size()], grid[t / folds.size()], outer_fold);
  });
  if (log) {
    for (auto& r : results) log->entries.push_back(std::move(r.entry));
  }
  return reduce_cells(grid, results, folds.size());
}

EvaluationResult evaluate_outer(const features::FeatureTable& table, const FoldPlan& plan,
                                std::span<const ClassifierSpec> grid,
                                const EvaluationConfig& config) {
  table.validate();
  if (grid.empty()) throw ConfigError("evaluation needs a nonempty grid");
  if (plan.outer.empty()) throw ConfigError("fold plan has no outer folds");
  if (config.gamma && !(*config.gamma >= 0.0 && *config.gamma <= 1.0)) {
    throw ConfigError("gamma must lie in [0, 1]");
  }
  const std::size_t n_outer = plan.outer.size();
  const std::size_t n_cells = grid.size();

  EvaluationResult result;
  result.plan = plan;
  result.report.family = grid.front().family;
  result.report.grid.assign(grid.begin(), grid.end());

  // Inner-A: every (outer fold, cell, inner fold) triple in one flat pass.
  std::vector<std::size_t> offsets(n_outer + 1, 0);
  for (std::size_t o = 0; o < n_outer; ++o) {
    offsets[o + 1] = offsets[o] + n_cells * plan.outer[o].inner_a.size();
  }
  std::vector<CellFold> cells(offsets[n_outer]);
  parallel_for(cells.size(), [&](std::size_t t) {
    const std::size_t o =
        static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), t) -
                                 offsets.begin()) - 1;
    const std::size_t k = plan.outer[o].inner_a.size();
    const std::size_t local = t - offsets[o];
    cells[t] = run_cell_fold(table, plan.outer[o].inner_a[local % k], grid[local / k], o);
  });
  std::vector<GridResult> searches;
  for (std::size_t o = 0; o < n_outer; ++o) {
    const std::span<const CellFold> slice(cells.data() + offsets[o], offsets[o + 1] - offsets[o]);
    searches.push_back(reduce_cells(grid, slice, plan.outer[o].inner_a.size()));
  }

  // Inner-B: threshold data from the chosen spec.
  std::vector<std::size_t> b_offsets(n_outer + 1, 0);
  for (std::size_t o = 0; o < n_outer; ++o) {
    b_offsets[o + 1] = b_offsets[o] + plan.outer[o].inner_b.size();
  }
  std::vector<CoughScores> b_scores(b_offsets[n_outer]);
  std::vector<RunLogEntry> b_entries(b_offsets[n_outer]);
  parallel_for(b_scores.size(), [&](std::size_t t) {
    const std::size_t o =
        static_cast<std::size_t>(std::upper_bound(b_offsets.begin(), b_offsets.end(), t) -
                                 b_offsets.begin()) - 1;
    const Split& split = plan.outer[o].inner_b[t - b_offsets[o]];
    b_entries[t].outer_fold = o;
    b_entries[t].phase = "inner_b";
    b_scores[t] = fit_and_score(table, split.train, split.test, grid[searches[o].best],
                                &b_entries[t]);
  });

  // Final model per outer fold.
  std::vector<FoldResult> folds(n_outer);
  std::vector<RunLogEntry> final_entries(n_outer);
  for (std::size_t o = 0; o < n_outer; ++o) {
    FoldResult& f = folds[o];
    f.fold = o;
    f.best = grid[searches[o].best];
    f.best_inner_auc = searches[o].mean_auc[searches[o].best];
    f.cell_auc = searches[o].mean_auc;
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t t = b_offsets[o]; t < b_offsets[o + 1]; ++t) {
      scores.insert(scores.end(), b_scores[t].p_hat.begin(), b_scores[t].p_hat.end());
      labels.insert(labels.end(), b_scores[t].labels.begin(), b_scores[t].labels.end());
    }
    f.gamma_ee = eer_threshold(roc_curve(scores, labels)).threshold;
    f.gamma = config.gamma.value_or(f.gamma_ee);
  }
  parallel_for(n_outer, [&](std::size_t o) {
    FoldResult& f = folds[o];
    final_entries[o].outer_fold = o;
    final_entries[o].phase = "final";
    f.coughs = fit_and_score(table, plan.outer[o].train, plan.outer[o].test, f.best,
                             &final_entries[o]);
    f.cough_roc = roc_curve(f.coughs.p_hat, f.coughs.labels);
    std::vector<std::string> order;
    std::map<std::string, std::vector<CoughProbabilities>> by_patient;
    std::map<std::string, int> label_of;
    for (std::size_t c = 0; c < f.coughs.cough_ids.size(); ++c) {
      const std::string& p = f.coughs.patient_ids[c];
      if (!by_patient.count(p)) order.push_back(p);
      by_patient[p].push_back(f.coughs.probabilities[c]);
      label_of[p] = f.coughs.labels[c];
    }
    std::vector<double> tbi2;
    std::vector<int> labels;
    for (const auto& p : order) {
      PatientScore s = score_patient(by_patient[p], f.gamma_ee, f.gamma);
      s.patient_id = p;
      s.label = label_of[p];
      tbi2.push_back(s.tbi2);
      labels.push_back(s.label);
      f.patients.push_back(std::move(s));
    }
    f.patient_roc = roc_curve(tbi2, labels);
    f.auc = f.patient_roc.auc;
  });

  // Ordered reduction.
  MetricsReport& rep = result.report;
  std::vector<double> aucs;
  std::vector<double> all_tbi2;
  std::vector<int> all_labels;
  std::vector<int> decisions;
  std::vector<double> cough_scores;
  std::vector<int> cough_labels;
  std::vector<int> cough_calls;
  std::map<std::string, std::size_t> spec_votes;
  for (const auto& f : folds) {
    aucs.push_back(f.auc);
    for (const auto& p : f.patients) {
      all_tbi2.push_back(p.tbi2);
      all_labels.push_back(p.label);
      decisions.push_back(p.decision ? 1 : 0);
    }
    for (std::size_t c = 0; c < f.coughs.p_hat.size(); ++c) {
      cough_scores.push_back(f.coughs.p_hat[c]);
      cough_labels.push_back(f.coughs.labels[c]);
      cough_calls.push_back(f.coughs.p_hat[c] >= f.gamma_ee ? 1 : 0);
    }
    ++spec_votes[f.best.describe()];
  }
  rep.auc_mean = mean(aucs);
  rep.auc_sd = sample_sd(aucs);
  rep.patient_confusion = confusion(decisions, all_labels);
  rep.cough_confusion = confusion(cough_calls, cough_labels);
  rep.pooled_patient_roc = roc_curve(all_tbi2, all_labels);
  rep.pooled_cough_roc = roc_curve(cough_scores, cough_labels);
  for (double sp : config.specificities) {
    rep.sensitivity_at.emplace_back(sp, sensitivity_at_specificity(rep.pooled_patient_roc, sp));
  }
  std::size_t votes = 0;
  for (const auto& f : folds) {
    const std::size_t v = spec_votes[f.best.describe()];
    if (v > votes) {
      votes = v;
      rep.modal_spec = f.best.describe();
    }
  }
  rep.folds = std::move(folds);

  for (auto& c : cells) result.log.entries.push_back(std::move(c.entry));
  for (auto& e : b_entries) result.log.entries.push_back(std::move(e));
  for (auto& e : final_entries) result.log.entries.push_back(std::move(e));
  audit(result.log);
  return result;
}

}  // namespace coughscreen::evaluation
