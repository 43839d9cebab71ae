#include <fstream>
#include <json.hpp>
#include <sstream>

#include "coughscreen/evaluation.hpp"

namespace coughscreen::evaluation {
namespace {

using nlohmann::ordered_json;

ordered_json confusion_json(const Confusion& c) {
  return ordered_json{{"tp", c.tp},
                      {"tn", c.tn},
                      {"fp", c.fp},
                      {"fn", c.fn},
                      {"accuracy", c.accuracy()},
                      {"ppv", c.ppv()},
                      {"npv", c.npv()},
                      {"sensitivity", c.sensitivity()},
                      {"specificity", c.specificity()}};
}

ordered_json spec_json(const classifiers::ClassifierSpec& s) {
  ordered_json j;
  for (const auto& [name, value] : s.hyperparameters()) j[name] = value;
  if (s.family == classifiers::Family::kSVM) j["kernel"] = classifiers::to_string(s.kernel);
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

std::string roc_text(const RocCurve& curve) {
  std::ostringstream s;
  s << "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    s << format_double(p.threshold) << ',' << format_double(p.fpr) << ',' << format_double(p.tpr)
      << '\n';
  }
  return s.str();
}

}  // namespace

std::string metrics_json(const EvaluationResult& result) {
  const MetricsReport& r = result.report;
  ordered_json j;
  j["family"] = classifiers::to_string(r.family);
  j["seed"] = result.plan.seed;
  j["fold_counts"] = {{"outer", result.plan.counts.outer},
                      {"inner_a", result.plan.counts.inner_a},
                      {"inner_b", result.plan.counts.inner_b}};
  j["auc_mean"] = r.auc_mean;
  j["auc_sd"] = r.auc_sd;
  j["patient_level"] = confusion_json(r.patient_confusion);
  j["cough_level"] = confusion_json(r.cough_confusion);
  j["pooled_patient_auc"] = r.pooled_patient_roc.auc;
  j["pooled_cough_auc"] = r.pooled_cough_roc.auc;
  ordered_json sens = ordered_json::array();
  for (const auto& [sp, se] : r.sensitivity_at) {
    sens.push_back({{"specificity", sp}, {"sensitivity", se}});
  }
  j["sensitivity_at_specificity"] = sens;
  j["modal_hyperparameters"] = r.modal_spec;
  ordered_json folds = ordered_json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold + 1},
                     {"auc", f.auc},
                     {"cough_auc", f.cough_roc.auc},
                     {"hyperparameters", spec_json(f.best)},
                     {"model", f.best.describe()},
                     {"inner_auc", f.best_inner_auc},
                     {"gamma_ee", f.gamma_ee},
                     {"gamma", f.gamma},
                     {"test_patients", f.patients.size()},
                     {"test_coughs", f.coughs.cough_ids.size()}});
  }
  j["folds"] = folds;
  ordered_json grid = ordered_json::array();
  for (std::size_t c = 0; c < r.grid.size(); ++c) {
    ordered_json cell{{"model", r.grid[c].describe()}};
    ordered_json inner = ordered_json::array();
    for (const auto& f : r.folds) inner.push_back(f.cell_auc[c]);
    cell["inner_auc"] = inner;
    grid.push_back(cell);
  }
  j["grid"] = grid;
  return j.dump(2) + "\n";
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  write_text(path, roc_text(curve));
}

RocCurve read_roc_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open ROC file " + path.string());
  std::string line;
  if (!std::getline(f, line) || trim(line) != "threshold,fpr,tpr") {
    throw DataError(path.string() + ": expected header threshold,fpr,tpr");
  }
  RocCurve curve;
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cells = split(trim(line), ',');
    if (cells.size() != 3) throw DataError(where + ": expected 3 fields");
    curve.points.push_back({parse_double(cells[0], where), parse_double(cells[1], where),
                            parse_double(cells[2], where)});
  }
  if (curve.points.size() < 2) throw DataError(path.string() + ": ROC curve needs two points");
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    curve.auc += (b.fpr - a.fpr) * (b.tpr + a.tpr) / 2.0;
  }
  return curve;
}

void write_outputs(const EvaluationResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  write_text(dir / "metrics.json", metrics_json(result));
  write_roc_csv(result.report.pooled_patient_roc, dir / "roc_patient.csv");
  write_roc_csv(result.report.pooled_cough_roc, dir / "roc_cough.csv");
  std::ostringstream scores;
  scores << "fold,patient_id,label,tbi1,tbi2,gamma_ee,gamma,decision,n_coughs,n_frames\n";
  for (const auto& f : result.report.folds) {
    write_roc_csv(f.patient_roc, dir / ("roc_fold" + std::to_string(f.fold + 1) + ".csv"));
    for (const auto& p : f.patients) {
      scores << f.fold + 1 << ',' << p.patient_id << ',' << p.label << ','
             << format_double(p.tbi1) << ',' << format_double(p.tbi2) << ','
             << format_double(p.gamma_ee) << ',' << format_double(p.gamma) << ','
             << (p.decision ? 1 : 0) << ',' << p.n_coughs << ',' << p.n_frames << '\n';
    }
  }
  write_text(dir / "patient_scores.csv", scores.str());
  write_text(dir / "run_log.txt", result.log.to_text());
}

}  // namespace coughscreen::evaluation
