#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coughscreen/classifiers.hpp"
#include "coughscreen/corpus.hpp"
#include "coughscreen/evaluation.hpp"
#include "coughscreen/features.hpp"

namespace coughscreen::config {

enum class ScoringMode { kPerCough, kPerFrame };

/// Everything a CLI run needs. Built from defaults, then an INI file, then
/// command-line flags, and validated before any output is written.
struct RunConfig {
  // [corpus]
  std::filesystem::path manifest;
  std::filesystem::path annotations;
  std::filesystem::path audio_root;
  int sample_rate = 44100;

  // [synth]
  std::string preset = "easy";
  corpus::SyntheticConfig synth = corpus::SyntheticConfig::preset("easy");

  // [features]
  features::FeatureConfig features;
  ScoringMode scoring = ScoringMode::kPerCough;
  /// Pre-extracted feature CSV; when empty, features come from the corpus.
  std::filesystem::path table;

  // [classifier] and [grid.<family>]
  classifiers::ClassifierSpec classifier;
  /// Explicit grid; empty means the family default (or the published grid
  /// in paper mode).
  std::vector<classifiers::ClassifierSpec> grid;

  // [evaluation]
  evaluation::EvaluationConfig evaluation;

  // [sfs]
  std::size_t sfs_max_features = 0;
  bool sfs_research_grid = false;
  /// Use [classifier] as given instead of pre-selecting from the grid.
  bool sfs_fixed_spec = false;

  bool paper_mode = false;
  std::size_t workers = 0;
  std::filesystem::path out;

  /// Verbatim text of the config file, if any.
  std::string source_text;
  std::filesystem::path source_path;

  /// Grid actually searched: `grid`, or the default for the family.
  std::vector<classifiers::ClassifierSpec> effective_grid() const;
  /// Resolved settings as INI text.
  std::string to_ini() const;
};

/// Command-line values that take precedence over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool paper_mode = false;
  std::optional<std::filesystem::path> out;
};

/// Parses an INI file (unknown sections or keys are errors). Relative paths
/// resolve against the file's directory.
RunConfig load(const std::optional<std::filesystem::path>& path, const Overrides& overrides);

/// Applies paper-mode locks and range checks. Throws ConfigError.
void validate(const RunConfig& config);

/// Checks that the inputs needed by extract/evaluate/sfs are set and exist.
void require_corpus_or_table(const RunConfig& config);

std::string to_string(ScoringMode mode);

}  // namespace coughscreen::config
