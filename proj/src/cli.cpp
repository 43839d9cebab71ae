#include "coughscreen/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "coughscreen/corpus.hpp"
#include "coughscreen/evaluation.hpp"
#include "coughscreen/features.hpp"
#include "coughscreen/parallel.hpp"
#include "coughscreen/selection.hpp"

namespace coughscreen::cli {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
  if (!f) throw DataError("failed writing " + path.string());
}

std::filesystem::path require_out(const config::RunConfig& cfg) {
  if (cfg.out.empty()) throw ConfigError("no output directory: pass --out DIR or set [run] out");
  return cfg.out;
}

void prepare_out(const std::filesystem::path& dir, const config::RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string());
  if (!cfg.source_text.empty()) write_text(dir / "config.ini", cfg.source_text);
  write_text(dir / "effective_config.ini", cfg.to_ini());
}

corpus::Corpus load_corpus(const config::RunConfig& cfg) {
  return corpus::load_corpus(cfg.manifest, cfg.annotations, cfg.audio_root, cfg.sample_rate);
}

features::FeatureTable extract_table(const corpus::Corpus& corpus, const config::RunConfig& cfg,
                                     std::ostream& err) {
  if (corpus.segments.empty()) throw DataError("corpus has no annotated coughs");
  const bool per_frame = cfg.scoring == config::ScoringMode::kPerFrame;
  const auto feats = features::extract(corpus.segments, cfg.features, per_frame);
  std::size_t warned = 0;
  std::string first;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (feats[i].vector.warnings.empty()) continue;
    if (warned++ == 0) {
      first = corpus.segments[i].cough_id + ": " + feats[i].vector.warnings.front();
    }
  }
  if (warned > 0) {
    err << "warning: " << warned << " of " << feats.size() << " coughs raised feature warnings"
        << " (first: " << first << ")\n";
  }
  return per_frame ? features::frame_table(corpus, feats, cfg.features)
                   : features::cough_table(corpus, feats);
}

std::vector<evaluation::PatientInfo> infos_for(const features::FeatureTable& table,
                                               const config::RunConfig& cfg) {
  if (!cfg.manifest.empty()) {
    const auto manifest = corpus::parse_manifest(cfg.manifest);
    return evaluation::patient_infos(table, &manifest);
  }
  return evaluation::patient_infos(table);
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

int exit_code(const Error& e) {
  switch (e.category()) {
    case Error::Category::kConfig:
      return 2;
    case Error::Category::kData:
      return 3;
    case Error::Category::kNumeric:
      return 4;
  }
  return 1;
}

features::FeatureTable load_table(const config::RunConfig& cfg, std::ostream& err) {
  config::require_corpus_or_table(cfg);
  if (!cfg.table.empty()) return features::read_csv(cfg.table);
  return extract_table(load_corpus(cfg), cfg, err);
}

void cmd_synth(const config::RunConfig& cfg, std::ostream& out) {
  const auto dir = require_out(cfg);
  const auto corpus = corpus::generate_synthetic(cfg.synth, dir);
  prepare_out(dir, cfg);
  out << corpus.manifest.string() << '\n';
}

void cmd_extract(const config::RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto dir = require_out(cfg);
  if (cfg.manifest.empty() || cfg.annotations.empty()) {
    throw ConfigError("extract needs [corpus] manifest and [corpus] annotations");
  }
  config::require_corpus_or_table(cfg);
  const auto corpus = load_corpus(cfg);
  const auto table = extract_table(corpus, cfg, err);
  prepare_out(dir, cfg);
  const auto path = dir / "features.csv";
  features::write_csv(table, path);
  out << path.string() << " (" << table.rows() << " rows, " << table.dimension()
      << " features)\n";
}

void cmd_evaluate(const config::RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto dir = require_out(cfg);
  const auto table = load_table(cfg, err);
  const auto plan =
      evaluation::make_fold_plan(infos_for(table, cfg), cfg.evaluation.seed, cfg.evaluation.folds);
  const auto grid = cfg.effective_grid();
  const auto result = evaluation::evaluate_outer(table, plan, grid, cfg.evaluation);
  prepare_out(dir, cfg);
  evaluation::write_outputs(result, dir);
  const auto& r = result.report;
  out << "AUC " << fixed(r.auc_mean) << " +/- " << fixed(r.auc_sd) << " over "
      << r.folds.size() << " outer folds; patient accuracy "
      << fixed(r.patient_confusion.accuracy()) << "; leakage audit passed; results in "
      << dir.string() << '\n';
}

void cmd_sfs(const config::RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto dir = require_out(cfg);
  const auto table = load_table(cfg, err);
  const auto plan =
      evaluation::make_fold_plan(infos_for(table, cfg), cfg.evaluation.seed, cfg.evaluation.folds);
  selection::SfsOptions options;
  options.max_features = cfg.sfs_max_features;
  if (cfg.sfs_research_grid) options.research_grid = cfg.effective_grid();
  const auto spec = cfg.sfs_fixed_spec || cfg.sfs_research_grid
                        ? cfg.classifier
                        : selection::preselect(table, plan, cfg.effective_grid());
  const auto trace = selection::sfs(table, plan, spec, options);
  prepare_out(dir, cfg);
  selection::write_trace(trace, dir / "sfs_trace.csv");
  out << "spec " << spec.describe() << "; best prefix " << trace.best_prefix << " features, inner AUC "
      << fixed(trace.best_auc) << "; trace in " << (dir / "sfs_trace.csv").string() << '\n';
}

void cmd_report(const std::filesystem::path& run_dir, const config::RunConfig& cfg,
                std::ostream& out) {
  const auto metrics_path = run_dir / "metrics.json";
  if (!std::filesystem::is_directory(run_dir)) {
    throw DataError("run directory does not exist: " + run_dir.string());
  }
  std::ifstream f(metrics_path, std::ios::binary);
  if (!f) throw DataError("no metrics.json in " + run_dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + metrics_path.string() + ": " + e.what());
  }
  auto num = [](const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
  };
  const auto roc = evaluation::read_roc_csv(run_dir / "roc_patient.csv");
  try {
    out << "family: " << m.at("family").get<std::string>() << '\n';
    out << "AUC (patient level, mean +/- SD over " << m.at("folds").size()
        << " outer folds): " << fixed(num(m.at("auc_mean"))) << " +/- "
        << fixed(num(m.at("auc_sd"))) << '\n';
    for (const char* level : {"patient_level", "cough_level"}) {
      const auto& c = m.at(level);
      out << level << ": accuracy " << fixed(num(c.at("accuracy"))) << ", PPV "
          << fixed(num(c.at("ppv"))) << ", NPV " << fixed(num(c.at("npv"))) << " (TP "
          << c.at("tp").get<std::size_t>() << ", TN " << c.at("tn").get<std::size_t>() << ", FP "
          << c.at("fp").get<std::size_t>() << ", FN " << c.at("fn").get<std::size_t>() << ")\n";
    }
    out << "modal hyperparameters: " << m.at("modal_hyperparameters").get<std::string>() << '\n';
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + metrics_path.string() + ": " + e.what());
  }
  for (double sp : cfg.evaluation.specificities) {
    out << "sensitivity at specificity " << fixed(sp, 2) << ": "
        << fixed(evaluation::sensitivity_at_specificity(roc, sp)) << '\n';
  }

  std::ostringstream combined;
  combined << "curve,threshold,fpr,tpr\n";
  auto append = [&](const std::string& name, const evaluation::RocCurve& c) {
    for (const auto& p : c.points) {
      combined << name << ',' << format_double(p.threshold) << ',' << format_double(p.fpr) << ','
               << format_double(p.tpr) << '\n';
    }
  };
  append("pooled", roc);
  for (std::size_t k = 1;; ++k) {
    const auto path = run_dir / ("roc_fold" + std::to_string(k) + ".csv");
    if (!std::filesystem::exists(path)) break;
    append("fold" + std::to_string(k), evaluation::read_roc_csv(path));
  }
  const auto dest = cfg.out.empty() ? run_dir : cfg.out;
  std::error_code ec;
  std::filesystem::create_directories(dest, ec);
  write_text(dest / "roc_combined.csv", combined.str());
  out << "combined ROC: " << (dest / "roc_combined.csv").string() << '\n';
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cough-audio TB screening pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  bool paper_mode = false;
  std::string out_dir;
  auto* config_opt = app.add_option("--config", config_path, "INI config file");
  auto* seed_opt = app.add_option("--seed", seed, "seed for synthesis, folds and training");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads (0 = all cores)");
  app.add_flag("--paper-mode", paper_mode, "restrict every range to the published grids");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  auto* extract = app.add_subcommand("extract", "write the per-cough feature CSV");
  auto* evaluate = app.add_subcommand("evaluate", "nested cross-validation");
  auto* sfs = app.add_subcommand("sfs", "sequential forward selection");
  auto* report = app.add_subcommand("report", "summarise an evaluation run");
  std::string run_dir;
  report->add_option("run_dir", run_dir, "directory written by evaluate")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    config::Overrides ov;
    if (*seed_opt) ov.seed = seed;
    if (*workers_opt) ov.workers = workers;
    ov.paper_mode = paper_mode;
    if (*out_opt) ov.out = std::filesystem::path(out_dir);
    const auto cfg = config::load(
        *config_opt ? std::optional<std::filesystem::path>(config_path) : std::nullopt, ov);
    config::validate(cfg);
    set_worker_count(cfg.workers);

    if (*synth) cmd_synth(cfg, out);
    else if (*extract) cmd_extract(cfg, out, err);
    else if (*evaluate) cmd_evaluate(cfg, out, err);
    else if (*sfs) cmd_sfs(cfg, out, err);
    else if (*report) cmd_report(run_dir, cfg, out);
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace coughscreen::cli
