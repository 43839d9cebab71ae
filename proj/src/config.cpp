#include "coughscreen/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace coughscreen::config {
namespace {

namespace pt = boost::property_tree;

using classifiers::ClassifierSpec;
using classifiers::Family;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"corpus", {"manifest", "annotations", "audio_root", "sample_rate"}},
      {"synth",
       {"preset", "patients_per_class", "coughs_per_patient", "separability", "snr_db", "seed",
        "min_cough_s", "max_cough_s", "speech_and_breath"}},
      {"features",
       {"kind", "n_mfcc", "n_filters", "frame_length", "sections", "include_deltas", "window",
        "scoring", "table"}},
      {"classifier",
       {"family", "nu1", "nu2", "nu3", "lr_tolerance", "lr_max_iterations", "neighbours",
        "leaf_size", "c", "gamma", "kernel", "svm_tolerance", "hidden", "l2", "learning_rate",
        "epochs", "batch_size", "seed", "standardize", "class_weights"}},
      {"grid.lr", {"nu1", "nu2", "nu3"}},
      {"grid.knn", {"neighbours", "leaf_size"}},
      {"grid.svm", {"c", "gamma"}},
      {"grid.mlp", {"hidden", "l2", "learning_rate"}},
      {"evaluation",
       {"outer_folds", "inner_a_folds", "inner_b_folds", "seed", "gamma", "specificities"}},
      {"sfs", {"max_features", "research_grid", "fixed_spec"}},
      {"run", {"paper_mode", "workers", "out"}},
  };
  return keys;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

  void read(const std::string& key, double& out) const {
    if (auto v = raw(key)) out = number(*v, key);
  }
  void read(const std::string& key, std::size_t& out) const {
    if (auto v = raw(key)) out = count(*v, key);
  }
  void read(const std::string& key, int& out) const {
    if (auto v = raw(key)) out = static_cast<int>(count(*v, key));
  }
  void read(const std::string& key, bool& out) const {
    if (auto v = raw(key)) out = boolean(*v, key);
  }
  void read(const std::string& key, std::string& out) const {
    if (auto v = raw(key)) out = *v;
  }
  std::optional<bool> optional_bool(const std::string& key) const {
    if (auto v = raw(key)) return boolean(*v, key);
    return std::nullopt;
  }
  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    if (auto v = raw(key)) {
      for (const auto& item : split(*v, ',')) out.push_back(number(trim(item), key));
      if (out.empty()) throw ConfigError(where(key) + ": empty list");
    }
    return out;
  }

 private:
  double number(const std::string& text, const std::string& key) const {
    try {
      return parse_double(text, where(key));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  std::uint64_t count(const std::string& text, const std::string& key) const {
    long long v = 0;
    try {
      v = parse_int(text, where(key));
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    if (v < 0) throw ConfigError(where(key) + " must be >= 0");
    return static_cast<std::uint64_t>(v);
  }
  bool boolean(const std::string& text, const std::string& key) const {
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ConfigError(where(key) + ": expected true or false, got '" + text + "'");
  }

  const pt::ptree* tree_;
  std::string name_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.empty() || p.is_absolute()) return p;
  return base / p;
}

std::vector<ClassifierSpec> read_grid(const Section& s, const ClassifierSpec& base,
                                      bool present) {
  if (!present) return {};
  auto or_base = [](std::vector<double> v, double fallback) {
    if (v.empty()) v.push_back(fallback);
    return v;
  };
  std::vector<ClassifierSpec> grid;
  switch (base.family) {
    case Family::kLR: {
      const auto nu1 = or_base(s.list("nu1"), base.nu1);
      const auto nu2 = or_base(s.list("nu2"), base.nu2);
      const auto nu3 = s.list("nu3");
      for (double a : nu1) {
        for (double b : nu2) {
          std::vector<double> cs = nu3;
          if (cs.empty()) cs.push_back(std::round((1.0 - b) * 1e9) / 1e9);
          for (double c : cs) {
            ClassifierSpec spec = base;
            spec.nu1 = a;
            spec.nu2 = b;
            spec.nu3 = c;
            grid.push_back(spec);
          }
        }
      }
      break;
    }
    case Family::kKNN:
      for (double k : or_base(s.list("neighbours"), static_cast<double>(base.neighbours))) {
        for (double leaf : or_base(s.list("leaf_size"), static_cast<double>(base.leaf_size))) {
          if (k < 1 || leaf < 1 || k != std::floor(k) || leaf != std::floor(leaf)) {
            throw ConfigError("[grid.knn] values must be positive integers");
          }
          ClassifierSpec spec = base;
          spec.neighbours = static_cast<std::size_t>(k);
          spec.leaf_size = static_cast<std::size_t>(leaf);
          grid.push_back(spec);
        }
      }
      break;
    case Family::kSVM:
      for (double c : or_base(s.list("c"), base.svm_c)) {
        for (double g : or_base(s.list("gamma"), base.svm_gamma)) {
          ClassifierSpec spec = base;
          spec.svm_c = c;
          spec.svm_gamma = g;
          grid.push_back(spec);
        }
      }
      break;
    case Family::kMLP:
      for (double h : or_base(s.list("hidden"), static_cast<double>(base.hidden))) {
        for (double l2 : or_base(s.list("l2"), base.mlp_l2)) {
          for (double lr : or_base(s.list("learning_rate"), base.learning_rate)) {
            if (h < 1 || h != std::floor(h)) {
              throw ConfigError("[grid.mlp] hidden must be a positive integer");
            }
            ClassifierSpec spec = base;
            spec.hidden = static_cast<std::size_t>(h);
            spec.mlp_l2 = l2;
            spec.learning_rate = lr;
            grid.push_back(spec);
          }
        }
      }
      break;
  }
  return grid;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace

std::string to_string(ScoringMode mode) {
  return mode == ScoringMode::kPerCough ? "per_cough" : "per_frame";
}

std::vector<ClassifierSpec> RunConfig::effective_grid() const {
  if (!grid.empty()) return grid;
  return paper_mode ? evaluation::paper_grid(classifier) : evaluation::default_grid(classifier);
}

RunConfig load(const std::optional<std::filesystem::path>& path, const Overrides& overrides) {
  RunConfig c;
  pt::ptree tree;
  std::filesystem::path base = std::filesystem::current_path();
  if (path) {
    std::ifstream f(*path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file " + path->string());
    std::ostringstream text;
    text << f.rdbuf();
    c.source_text = text.str();
    c.source_path = *path;
    try {
      std::istringstream in(c.source_text);
      pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError("config " + path->string() + ": " + e.message() + " (line " +
                        std::to_string(e.line()) + ")");
    }
    base = std::filesystem::absolute(*path).parent_path();
    for (const auto& [section, body] : tree) {
      auto it = allowed_keys().find(section);
      if (it == allowed_keys().end()) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside any section");
        throw ConfigError("config: unknown section [" + section + "]");
      }
      for (const auto& [key, value] : body) {
        if (!it->second.count(key)) {
          throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
        }
      }
    }
  }
  auto section = [&](const std::string& name) {
    auto child = tree.get_child_optional(pt::ptree::path_type(name, '\0'));
    return Section(child ? &*child : nullptr, name);
  };
  auto has_section = [&](const std::string& name) {
    return static_cast<bool>(tree.get_child_optional(pt::ptree::path_type(name, '\0')));
  };

  const Section run = section("run");
  run.read("paper_mode", c.paper_mode);
  run.read("workers", c.workers);
  if (auto out = run.raw("out")) c.out = resolve(base, *out);
  if (overrides.paper_mode) c.paper_mode = true;

  const Section corpus = section("corpus");
  if (auto v = corpus.raw("manifest")) c.manifest = resolve(base, *v);
  if (auto v = corpus.raw("annotations")) c.annotations = resolve(base, *v);
  if (auto v = corpus.raw("audio_root")) c.audio_root = resolve(base, *v);
  corpus.read("sample_rate", c.sample_rate);

  const Section synth = section("synth");
  synth.read("preset", c.preset);
  c.synth = corpus::SyntheticConfig::preset(c.preset);
  synth.read("patients_per_class", c.synth.patients_per_class);
  synth.read("coughs_per_patient", c.synth.coughs_per_patient);
  synth.read("separability", c.synth.separability);
  synth.read("snr_db", c.synth.snr_db);
  synth.read("seed", c.synth.seed);
  synth.read("min_cough_s", c.synth.min_cough_s);
  synth.read("max_cough_s", c.synth.max_cough_s);
  synth.read("speech_and_breath", c.synth.speech_and_breath);
  c.synth.sample_rate = c.sample_rate;

  const Section feat = section("features");
  std::string kind = "mfcc";
  feat.read("kind", kind);
  if (kind == "mfcc") {
    c.features.kind = features::FeatureKind::kMfcc;
  } else if (kind == "log_filterbank") {
    c.features.kind = features::FeatureKind::kLogFilterbank;
  } else {
    throw ConfigError("[features] kind must be mfcc or log_filterbank, got '" + kind + "'");
  }
  feat.read("n_mfcc", c.features.n_mfcc);
  feat.read("n_filters", c.features.n_filters);
  feat.read("frame_length", c.features.frame_length);
  feat.read("sections", c.features.sections);
  feat.read("include_deltas", c.features.include_deltas);
  std::string window = "hamming";
  feat.read("window", window);
  if (window == "hamming") {
    c.features.window = dsp::Window::kHamming;
  } else if (window == "rectangular") {
    c.features.window = dsp::Window::kRectangular;
  } else {
    throw ConfigError("[features] window must be hamming or rectangular");
  }
  std::string scoring = "per_cough";
  feat.read("scoring", scoring);
  if (scoring == "per_cough") {
    c.scoring = ScoringMode::kPerCough;
  } else if (scoring == "per_frame") {
    c.scoring = ScoringMode::kPerFrame;
  } else {
    throw ConfigError("[features] scoring must be per_cough or per_frame");
  }
  if (auto v = feat.raw("table")) c.table = resolve(base, *v);
  c.features.sample_rate = static_cast<double>(c.sample_rate);
  c.features.paper_mode = c.paper_mode;

  const Section cls = section("classifier");
  std::string family = "lr";
  cls.read("family", family);
  ClassifierSpec& s = c.classifier;
  s.family = classifiers::parse_family(family);
  cls.read("nu1", s.nu1);
  cls.read("nu2", s.nu2);
  if (cls.raw("nu2") && !cls.raw("nu3")) s.nu3 = std::round((1.0 - s.nu2) * 1e9) / 1e9;
  cls.read("nu3", s.nu3);
  cls.read("lr_tolerance", s.lr_tolerance);
  cls.read("lr_max_iterations", s.lr_max_iterations);
  cls.read("neighbours", s.neighbours);
  cls.read("leaf_size", s.leaf_size);
  cls.read("c", s.svm_c);
  cls.read("gamma", s.svm_gamma);
  if (auto k = cls.raw("kernel")) s.kernel = classifiers::parse_kernel(*k);
  cls.read("svm_tolerance", s.svm_tolerance);
  cls.read("hidden", s.hidden);
  cls.read("l2", s.mlp_l2);
  cls.read("learning_rate", s.learning_rate);
  cls.read("epochs", s.epochs);
  cls.read("batch_size", s.batch_size);
  cls.read("seed", s.seed);
  s.standardize = cls.optional_bool("standardize");
  s.class_weights = cls.optional_bool("class_weights").value_or(c.paper_mode);
  s.paper_mode = c.paper_mode;

  const std::string grid_name = "grid." + classifiers::to_string(s.family);
  c.grid = read_grid(section(grid_name), s, has_section(grid_name));

  const Section ev = section("evaluation");
  ev.read("outer_folds", c.evaluation.folds.outer);
  ev.read("inner_a_folds", c.evaluation.folds.inner_a);
  ev.read("inner_b_folds", c.evaluation.folds.inner_b);
  ev.read("seed", c.evaluation.seed);
  if (ev.raw("gamma")) {
    double g = 0.0;
    ev.read("gamma", g);
    c.evaluation.gamma = g;
  }
  if (ev.raw("specificities")) c.evaluation.specificities = ev.list("specificities");

  const Section sfs = section("sfs");
  sfs.read("max_features", c.sfs_max_features);
  sfs.read("research_grid", c.sfs_research_grid);
  sfs.read("fixed_spec", c.sfs_fixed_spec);

  if (overrides.seed) {
    c.synth.seed = *overrides.seed;
    c.evaluation.seed = *overrides.seed;
    c.classifier.seed = *overrides.seed;
    for (auto& cell : c.grid) cell.seed = *overrides.seed;
  }
  if (overrides.workers) c.workers = *overrides.workers;
  if (overrides.out) c.out = *overrides.out;
  return c;
}

void validate(const RunConfig& c) {
  if (c.sample_rate <= 0) throw ConfigError("[corpus] sample_rate must be positive");
  c.synth.validate();
  c.features.validate();
  c.classifier.validate();
  c.evaluation.folds.validate();
  for (const auto& cell : c.effective_grid()) {
    if (cell.family != c.classifier.family) throw ConfigError("grid family mismatch");
    cell.validate();
  }
  if (c.evaluation.gamma && !(*c.evaluation.gamma >= 0.0 && *c.evaluation.gamma <= 1.0)) {
    throw ConfigError("[evaluation] gamma must lie in [0, 1]");
  }
  for (double sp : c.evaluation.specificities) {
    if (!(sp > 0.0 && sp < 1.0)) throw ConfigError("[evaluation] specificities must lie in (0, 1)");
  }
  if (c.paper_mode) {
    const auto& f = c.evaluation.folds;
    if (f.outer != 5 || f.inner_a != 4 || f.inner_b != 2) {
      throw ConfigError("paper mode: fold counts are fixed at 5 outer, 4 inner-A, 2 inner-B");
    }
  }
}

void require_corpus_or_table(const RunConfig& c) {
  auto must_exist = [](const std::filesystem::path& p, const std::string& what) {
    if (!p.empty() && !std::filesystem::exists(p)) {
      throw ConfigError(what + " does not exist: " + p.string());
    }
  };
  must_exist(c.table, "[features] table");
  if (!c.table.empty()) return;
  if (c.manifest.empty() || c.annotations.empty()) {
    throw ConfigError(
        "no input: set [features] table, or both [corpus] manifest and [corpus] annotations");
  }
  must_exist(c.manifest, "[corpus] manifest");
  must_exist(c.annotations, "[corpus] annotations");
  must_exist(c.audio_root, "[corpus] audio_root");
}

std::string RunConfig::to_ini() const {
  std::ostringstream s;
  const auto& f = features;
  const auto& k = classifier;
  s << "[run]\npaper_mode = " << (paper_mode ? "true" : "false") << "\n\n";
  s << "[corpus]\nmanifest = " << manifest.string() << "\nannotations = " << annotations.string()
    << "\naudio_root = " << audio_root.string() << "\nsample_rate = " << sample_rate << "\n\n";
  s << "[synth]\npreset = " << preset << "\npatients_per_class = " << synth.patients_per_class
    << "\ncoughs_per_patient = " << synth.coughs_per_patient
    << "\nseparability = " << format_double(synth.separability)
    << "\nsnr_db = " << format_double(synth.snr_db) << "\nseed = " << synth.seed
    << "\nmin_cough_s = " << format_double(synth.min_cough_s)
    << "\nmax_cough_s = " << format_double(synth.max_cough_s)
    << "\nspeech_and_breath = " << (synth.speech_and_breath ? "true" : "false") << "\n\n";
  s << "[features]\nkind = "
    << (f.kind == features::FeatureKind::kMfcc ? "mfcc" : "log_filterbank")
    << "\nn_mfcc = " << f.n_mfcc << "\nn_filters = " << f.n_filters
    << "\nframe_length = " << f.frame_length << "\nsections = " << f.sections
    << "\ninclude_deltas = " << (f.include_deltas ? "true" : "false")
    << "\nwindow = " << (f.window == dsp::Window::kHamming ? "hamming" : "rectangular")
    << "\nscoring = " << to_string(scoring) << "\ntable = " << table.string() << "\n\n";
  s << "[classifier]\nfamily = " << classifiers::to_string(k.family)
    << "\nnu1 = " << format_double(k.nu1) << "\nnu2 = " << format_double(k.nu2)
    << "\nnu3 = " << format_double(k.nu3) << "\nlr_tolerance = " << format_double(k.lr_tolerance)
    << "\nlr_max_iterations = " << k.lr_max_iterations << "\nneighbours = " << k.neighbours
    << "\nleaf_size = " << k.leaf_size << "\nc = " << format_double(k.svm_c)
    << "\ngamma = " << format_double(k.svm_gamma) << "\nkernel = " << classifiers::to_string(k.kernel)
    << "\nsvm_tolerance = " << format_double(k.svm_tolerance) << "\nhidden = " << k.hidden
    << "\nl2 = " << format_double(k.mlp_l2) << "\nlearning_rate = " << format_double(k.learning_rate)
    << "\nepochs = " << k.epochs << "\nbatch_size = " << k.batch_size << "\nseed = " << k.seed
    << "\nstandardize = " << (k.standardizes() ? "true" : "false")
    << "\nclass_weights = " << (k.class_weights ? "true" : "false") << "\n\n";
  s << "# searched grid\n";
  for (const auto& cell : effective_grid()) s << "#   " << cell.describe() << '\n';
  s << "\n[evaluation]\nouter_folds = " << evaluation.folds.outer
    << "\ninner_a_folds = " << evaluation.folds.inner_a
    << "\ninner_b_folds = " << evaluation.folds.inner_b << "\nseed = " << evaluation.seed << '\n';
  if (evaluation.gamma) s << "gamma = " << format_double(*evaluation.gamma) << '\n';
  s << "specificities = " << join(evaluation.specificities) << "\n\n";
  s << "[sfs]\nmax_features = " << sfs_max_features
    << "\nresearch_grid = " << (sfs_research_grid ? "true" : "false")
    << "\nfixed_spec = " << (sfs_fixed_spec ? "true" : "false") << '\n';
  return s.str();
}

}  // namespace coughscreen::config
