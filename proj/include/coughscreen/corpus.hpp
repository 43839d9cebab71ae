#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coughscreen::corpus {

enum class Sex { kMale, kFemale };

struct PatientRecord {
  std::string patient_id;
  bool tb = false;
  std::vector<std::string> recording_paths;
  std::optional<int> age;
  std::optional<Sex> sex;
};

/// Parses the manifest CSV (`patient_id,tb_label,recording_path,age,sex`).
/// Rows sharing a patient_id are merged when their labels agree.
std::vector<PatientRecord> parse_manifest(const std::filesystem::path& path);

/// Recording identity used by annotation files: the file name without extension.
std::string recording_id_for(const std::string& recording_path);

struct AnnotationSpan {
  std::string recording_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string label;  // "c" cough, "b" breath, "s" speech; others are kept but unused

  double duration() const { return end_s - start_s; }
  bool is_cough() const { return label == "c"; }
  /// Coughs, breaths and speech are all excluded from the SNR background.
  bool is_foreground() const { return label == "c" || label == "b" || label == "s"; }
};

struct Annotations {
  std::vector<AnnotationSpan> spans;

  /// Cough spans grouped by recording (in first-appearance order), sorted by
  /// start time within each recording.
  std::vector<AnnotationSpan> coughs() const;
  /// Every span of one recording, sorted by start time.
  std::vector<AnnotationSpan> for_recording(const std::string& recording_id) const;
};

/// Parses the annotation TSV (`recording_id<TAB>start_s<TAB>end_s<TAB>label`).
/// Blank lines and lines starting with '#' are skipped.
Annotations parse_annotations(const std::filesystem::path& path);

struct CoughSegment {
  std::string patient_id;
  std::string recording_id;
  double start_s = 0.0;
  double end_s = 0.0;
  std::vector<double> samples;
  int sample_rate_hz = 0;
  /// Stable identity within a corpus: `<recording_id>:<index within recording>`.
  std::string cough_id;

  double duration() const { return end_s - start_s; }
};

/// Decodes each recording of `record` and slices out its annotated coughs.
/// Relative recording paths resolve against `audio_root`.
std::vector<CoughSegment> load_segments(const PatientRecord& record,
                                        const Annotations& annotations,
                                        const std::filesystem::path& audio_root,
                                        int expected_sample_rate);

struct SnrEstimate {
  double db = 0.0;
  /// Set when the background has zero power; `db` is then +infinity.
  bool degenerate = false;
};

/// 10 log10(Ps / Pn): Ps is the mean power over the cough spans, Pn the mean
/// power over everything outside cough, breath and speech spans.
SnrEstimate estimate_snr(std::span<const double> samples, double sample_rate,
                         std::span<const AnnotationSpan> spans);

/// Per-cough SNR against the recording's single background estimate, one
/// value per cough span in time order.
std::vector<SnrEstimate> estimate_cough_snr(std::span<const double> samples, double sample_rate,
                                            std::span<const AnnotationSpan> spans);

/// Per-cough bookkeeping consumed by summarize().
struct CoughInfo {
  std::string patient_id;
  bool tb = false;
  double length_s = 0.0;
  SnrEstimate snr;
};

struct ClassSummary {
  std::size_t patients = 0;
  std::size_t coughs = 0;
  double mean_coughs_per_patient = 0.0;
  double mean_length_s = 0.0;
  double total_length_s = 0.0;
  /// Statistics over coughs with a finite SNR.
  std::size_t snr_count = 0;
  double snr_mean_db = 0.0;
  double snr_sd_db = 0.0;  // sample standard deviation
};

struct CorpusSummary {
  ClassSummary tb;
  ClassSummary non_tb;
  ClassSummary total;
};

ClassSummary summarize_class(std::span<const CoughInfo> coughs);
/// Merges two summaries of disjoint patient sets.
ClassSummary combine(const ClassSummary& a, const ClassSummary& b);
CorpusSummary summarize(std::span<const CoughInfo> coughs);

struct Corpus {
  std::vector<PatientRecord> patients;
  std::vector<CoughSegment> segments;
  /// Parallel to `segments`.
  std::vector<SnrEstimate> snr;

  const PatientRecord& patient(const std::string& patient_id) const;
  std::vector<CoughInfo> cough_infos() const;
};

/// Manifest + annotations + audio into memory. When `audio_root` is empty,
/// relative paths resolve against the manifest's directory.
Corpus load_corpus(const std::filesystem::path& manifest, const std::filesystem::path& annotations,
                   const std::filesystem::path& audio_root, int expected_sample_rate);

struct SyntheticConfig {
  std::size_t n_classes = 2;
  std::size_t patients_per_class = 20;
  std::size_t coughs_per_patient = 10;
  /// 0 makes the two classes indistinguishable; 1 is a one-octave spectral shift.
  double separability = 1.0;
  double snr_db = 30.0;
  std::uint64_t seed = 7;
  int sample_rate = 44100;
  double min_cough_s = 0.4;
  double max_cough_s = 0.9;
  /// Adds one speech ("s") and one breath ("b") span to each recording.
  bool speech_and_breath = true;

  /// Named presets: "easy", "hard", "null".
  static SyntheticConfig preset(const std::string& name);
  void validate() const;
};

struct SyntheticCorpus {
  std::filesystem::path manifest;
  std::filesystem::path annotations;
  std::filesystem::path audio_dir;
  /// Generator-side tallies, indexed [non-TB, TB].
  std::size_t patients[2] = {0, 0};
  std::size_t coughs[2] = {0, 0};
  double total_length_s[2] = {0.0, 0.0};
};

/// Writes `manifest.csv`, `annotations.tsv` and `audio/*.wav` under
/// `out_dir`. Output bytes depend only on the config.
SyntheticCorpus generate_synthetic(const SyntheticConfig& config,
                                   const std::filesystem::path& out_dir);

}  // namespace coughscreen::corpus
