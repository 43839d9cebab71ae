#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coughscreen/common.hpp"
#include "coughscreen/corpus.hpp"
#include "coughscreen/dsp.hpp"

namespace coughscreen::features {

enum class FeatureKind { kMfcc, kLogFilterbank };

struct FeatureConfig {
  FeatureKind kind = FeatureKind::kMfcc;
  std::size_t n_mfcc = 13;          // cepstral coefficients kept
  std::size_t n_filters = 40;       // linear filters for log-filterbank features
  std::size_t frame_length = 2048;  // samples; frames never overlap
  std::size_t sections = 1;
  std::size_t delta_window = 2;
  bool include_deltas = true;
  dsp::Window window = dsp::Window::kHamming;
  double sample_rate = 44100.0;
  /// Restricts every value to the published grid (13/26/39 coefficients,
  /// 40..200 step 20 filters, 2^8..2^12 frame lengths, 1..4 sections).
  bool paper_mode = false;

  void validate() const;
  /// Static coefficients per frame (n_mfcc or n_filters).
  std::size_t static_dim() const;
  /// Per-frame feature width: statics [+ deltas + delta-deltas] + zcr + kurtosis.
  std::size_t frame_dim() const;
  /// Assembled vector width: sections * frame_dim().
  std::size_t dimension() const;
  /// Mel filters behind the cepstrum: max(n_mfcc, 26).
  std::size_t mel_bank_size() const;
  dsp::FilterBank make_filterbank() const;
};

/// Every grid point of the published feature search space.
std::vector<FeatureConfig> paper_grid();

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
  FeatureConfig config;
  std::size_t n_frames = 0;
  std::vector<std::string> warnings;
};

/// Thrown by kurtosis() for a zero-variance frame.
class DegenerateFrameError : public DataError {
 public:
  using DataError::DataError;
};

/// Per-frame log filterbank energies followed by a DCT, without any mean
/// removal. `bank` must come from config.make_filterbank().
Matrix cepstral_frames(std::span<const double> samples, const FeatureConfig& config,
                       const dsp::FilterBank& bank);

/// Cepstra of a single segment with that segment's long-term mean removed.
Matrix mfcc_frames(const corpus::CoughSegment& segment, const FeatureConfig& config);

/// Per-frame log energies of the linear filterbank (no DCT, no mean removal).
Matrix log_filterbank_frames(const corpus::CoughSegment& segment, const FeatureConfig& config);

/// Regression deltas over +/- `window` frames with edge replication. Returns
/// (delta, delta-delta).
std::pair<Matrix, Matrix> deltas(const Matrix& frames, std::size_t window = 2);

/// Fraction of adjacent sample pairs whose product is strictly negative.
double zcr(std::span<const double> frame);

/// Non-excess sample kurtosis (1/T) sum(((x - mean) / sd)^4).
double kurtosis(std::span<const double> frame);

/// Removes, per recording and per coefficient, the mean over every frame of
/// every cough in that recording. `recording_ids[i]` labels `cepstra[i]`.
void cepstral_mean_normalize(std::span<Matrix> cepstra,
                             std::span<const std::string> recording_ids);

/// Column names of one frame row, e.g. "mfcc3", "d_mfcc3", "dd_mfcc3", "zcr".
std::vector<std::string> frame_feature_names(const FeatureConfig& config);

/// Per-frame rows [statics | deltas | delta-deltas | zcr | kurtosis] for one
/// segment, given its (already normalised) static matrix.
Matrix frame_feature_matrix(const corpus::CoughSegment& segment, const Matrix& statics,
                            const FeatureConfig& config, std::vector<std::string>* warnings);

/// Averages frame rows over `sections` contiguous groups (earlier groups take
/// the remainder) and concatenates the group means.
std::vector<double> section_average(const Matrix& frame_rows, std::size_t sections);

/// One segment treated as its own recording for mean normalisation.
FeatureVector assemble(const corpus::CoughSegment& segment, const FeatureConfig& config);

/// Per-cough output of corpus-level extraction.
struct CoughFeatures {
  FeatureVector vector;
  /// Per-frame rows (un-sectioned), filled only when requested.
  Matrix frames;
};

/// Extracts every segment with per-recording cepstral mean normalisation.
/// Segments are processed in parallel; output order matches input order.
std::vector<CoughFeatures> extract(std::span<const corpus::CoughSegment> segments,
                                   const FeatureConfig& config, bool keep_frames = false);

}  // namespace coughscreen::features
