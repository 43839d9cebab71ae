#include "coughscreen/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "coughscreen/parallel.hpp"

namespace coughscreen::features {
namespace {

constexpr double kLogFloor = 1e-10;
constexpr std::size_t kMinMelFilters = 26;

std::vector<dsp::Frame> segment_frames(std::span<const double> samples,
                                       const FeatureConfig& config,
                                       std::vector<std::string>* warnings) {
  if (samples.empty()) throw DataError("feature extraction: empty segment");
  std::vector<dsp::Frame> frames =
      dsp::frame_signal(samples, config.frame_length, config.frame_length);
  if (frames.size() < config.sections) {
    if (warnings) {
      warnings->push_back("segment yields " + std::to_string(frames.size()) + " frame(s) for " +
                          std::to_string(config.sections) + " sections; zero-padded");
    }
    while (frames.size() < config.sections) {
      dsp::Frame pad;
      pad.start_index = frames.back().start_index + config.frame_length;
      pad.samples.assign(config.frame_length, 0.0);
      frames.push_back(std::move(pad));
    }
  }
  return frames;
}

Matrix static_frames(const std::vector<dsp::Frame>& frames, const FeatureConfig& config,
                     const dsp::FilterBank& bank) {
  const std::vector<double> window = dsp::window_coefficients(config.window, config.frame_length);
  Matrix out(frames.size(), config.static_dim());
  std::vector<double> buffer(config.frame_length);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t i = 0; i < buffer.size(); ++i) buffer[i] = frames[t].samples[i] * window[i];
    std::vector<double> energies = bank.apply(dsp::power_spectrum(buffer));
    for (double& e : energies) e = std::log(std::max(e, kLogFloor));
    if (config.kind == FeatureKind::kMfcc) {
      const std::vector<double> c = dsp::dct_ii(energies, config.n_mfcc);
      std::copy(c.begin(), c.end(), out.row(t).begin());
    } else {
      std::copy(energies.begin(), energies.end(), out.row(t).begin());
    }
  }
  return out;
}

void subtract_column_means(std::span<Matrix*> matrices) {
  if (matrices.empty()) return;
  const std::size_t cols = matrices.front()->cols();
  std::vector<double> mean(cols, 0.0);
  std::size_t count = 0;
  for (const Matrix* m : matrices) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) mean[c] += (*m)(r, c);
    }
    count += m->rows();
  }
  if (count == 0) return;
  for (double& v : mean) v /= static_cast<double>(count);
  for (Matrix* m : matrices) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) (*m)(r, c) -= mean[c];
    }
  }
}

std::string empty_filter_warning(const dsp::FilterBank& bank) {
  return std::to_string(bank.empty_filters()) + " of " + std::to_string(bank.n_filters) +
         " filters cover no FFT bin at frame length " + std::to_string(bank.frame_length) +
         "; their energies sit at the log floor";
}

FeatureVector finish_vector(const Matrix& rows, const FeatureConfig& config,
                            std::size_t n_frames, std::vector<std::string> warnings) {
  FeatureVector v;
  v.config = config;
  v.n_frames = n_frames;
  v.values = section_average(rows, config.sections);
  const std::vector<std::string> frame_names = frame_feature_names(config);
  for (std::size_t s = 0; s < config.sections; ++s) {
    for (const auto& n : frame_names) v.names.push_back("s" + std::to_string(s + 1) + "_" + n);
  }
  v.warnings = std::move(warnings);
  for (double x : v.values) {
    if (!std::isfinite(x)) throw NumericError("feature extraction produced a non-finite value");
  }
  return v;
}

}  // namespace

void FeatureConfig::validate() const {
  if (!dsp::is_power_of_two(frame_length) || frame_length < 2) {
    throw ConfigError("frame_length must be a power of two >= 2, got " +
                      std::to_string(frame_length));
  }
  if (sections == 0) throw ConfigError("sections must be positive");
  if (delta_window == 0) throw ConfigError("delta_window must be positive");
  if (!(sample_rate > 0.0)) throw ConfigError("sample_rate must be positive");
  if (kind == FeatureKind::kMfcc && n_mfcc == 0) throw ConfigError("n_mfcc must be positive");
  if (kind == FeatureKind::kLogFilterbank && n_filters == 0) {
    throw ConfigError("n_filters must be positive");
  }
  if (!paper_mode) return;

  if (frame_length < 256 || frame_length > 4096) {
    throw ConfigError("paper mode: frame_length must be 2^k with k = 8..12");
  }
  if (sections > 4) throw ConfigError("paper mode: sections must be 1..4");
  if (kind == FeatureKind::kMfcc && n_mfcc != 13 && n_mfcc != 26 && n_mfcc != 39) {
    throw ConfigError("paper mode: n_mfcc must be 13, 26 or 39");
  }
  if (kind == FeatureKind::kLogFilterbank &&
      (n_filters < 40 || n_filters > 200 || n_filters % 20 != 0)) {
    throw ConfigError("paper mode: n_filters must be 40..200 in steps of 20");
  }
  if (!include_deltas || delta_window != 2) {
    throw ConfigError("paper mode: deltas are always included with a window of 2");
  }
}

std::size_t FeatureConfig::static_dim() const {
  return kind == FeatureKind::kMfcc ? n_mfcc : n_filters;
}

std::size_t FeatureConfig::frame_dim() const {
  return (include_deltas ? 3 : 1) * static_dim() + 2;
}

std::size_t FeatureConfig::dimension() const { return sections * frame_dim(); }

std::size_t FeatureConfig::mel_bank_size() const { return std::max(n_mfcc, kMinMelFilters); }

dsp::FilterBank FeatureConfig::make_filterbank() const {
  if (kind == FeatureKind::kMfcc) {
    return dsp::build_filterbank(dsp::FilterKind::kMel, mel_bank_size(), frame_length,
                                 sample_rate, false);
  }
  return dsp::build_filterbank(dsp::FilterKind::kLinear, n_filters, frame_length, sample_rate,
                               false);
}

std::vector<FeatureConfig> paper_grid() {
  std::vector<FeatureConfig> grid;
  for (std::size_t k = 8; k <= 12; ++k) {
    for (std::size_t s = 1; s <= 4; ++s) {
      for (std::size_t m : {13, 26, 39}) {
        FeatureConfig c;
        c.paper_mode = true;
        c.kind = FeatureKind::kMfcc;
        c.frame_length = std::size_t{1} << k;
        c.sections = s;
        c.n_mfcc = m;
        grid.push_back(c);
      }
      for (std::size_t b = 40; b <= 200; b += 20) {
        FeatureConfig c;
        c.paper_mode = true;
        c.kind = FeatureKind::kLogFilterbank;
        c.frame_length = std::size_t{1} << k;
        c.sections = s;
        c.n_filters = b;
        grid.push_back(c);
      }
    }
  }
  return grid;
}

Matrix cepstral_frames(std::span<const double> samples, const FeatureConfig& config,
                       const dsp::FilterBank& bank) {
  if (config.kind != FeatureKind::kMfcc) {
    throw ConfigError("cepstral_frames requires the mfcc feature kind");
  }
  return static_frames(segment_frames(samples, config, nullptr), config, bank);
}

Matrix mfcc_frames(const corpus::CoughSegment& segment, const FeatureConfig& config) {
  FeatureConfig c = config;
  c.kind = FeatureKind::kMfcc;
  c.validate();
  Matrix m = cepstral_frames(segment.samples, c, c.make_filterbank());
  Matrix* one[] = {&m};
  subtract_column_means(one);
  return m;
}

Matrix log_filterbank_frames(const corpus::CoughSegment& segment, const FeatureConfig& config) {
  FeatureConfig c = config;
  c.kind = FeatureKind::kLogFilterbank;
  c.validate();
  return static_frames(segment_frames(segment.samples, c, nullptr), c, c.make_filterbank());
}

std::pair<Matrix, Matrix> deltas(const Matrix& frames, std::size_t window) {
  auto regress = [window](const Matrix& in) {
    Matrix out(in.rows(), in.cols());
    if (in.rows() == 0) return out;
    double denom = 0.0;
    for (std::size_t n = 1; n <= window; ++n) denom += static_cast<double>(n * n);
    denom *= 2.0;
    const auto last = static_cast<long long>(in.rows()) - 1;
    for (long long t = 0; t <= last; ++t) {
      for (std::size_t c = 0; c < in.cols(); ++c) {
        double num = 0.0;
        for (std::size_t n = 1; n <= window; ++n) {
          const auto ln = static_cast<long long>(n);
          const auto ahead = static_cast<std::size_t>(std::min(t + ln, last));
          const auto behind = static_cast<std::size_t>(std::max(t - ln, 0LL));
          num += static_cast<double>(n) * (in(ahead, c) - in(behind, c));
        }
        out(static_cast<std::size_t>(t), c) = num / denom;
      }
    }
    return out;
  };
  Matrix d = regress(frames);
  Matrix dd = regress(d);
  return {std::move(d), std::move(dd)};
}

double zcr(std::span<const double> frame) {
  if (frame.size() < 2) throw DataError("zcr: frame needs at least 2 samples");
  std::size_t crossings = 0;
  for (std::size_t t = 1; t < frame.size(); ++t) {
    if (frame[t] * frame[t - 1] < 0.0) ++crossings;
  }
  return static_cast<double>(crossings) / static_cast<double>(frame.size() - 1);
}

double kurtosis(std::span<const double> frame) {
  if (frame.empty()) throw DegenerateFrameError("kurtosis: empty frame");
  const double n = static_cast<double>(frame.size());
  const double mean = std::accumulate(frame.begin(), frame.end(), 0.0) / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : frame) {
    const double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw DegenerateFrameError("kurtosis: zero-variance frame");
  return m4 / (m2 * m2);
}

void cepstral_mean_normalize(std::span<Matrix> cepstra,
                             std::span<const std::string> recording_ids) {
  if (cepstra.size() != recording_ids.size()) {
    throw std::invalid_argument("cepstral_mean_normalize: one recording id per matrix required");
  }
  std::map<std::string, std::vector<Matrix*>> groups;
  for (std::size_t i = 0; i < cepstra.size(); ++i) groups[recording_ids[i]].push_back(&cepstra[i]);
  for (auto& [id, members] : groups) subtract_column_means(members);
}

std::vector<std::string> frame_feature_names(const FeatureConfig& config) {
  const std::string base = config.kind == FeatureKind::kMfcc ? "mfcc" : "fb";
  std::vector<std::string> names;
  const std::size_t d = config.static_dim();
  for (std::size_t k = 0; k < d; ++k) names.push_back(base + std::to_string(k));
  if (config.include_deltas) {
    for (std::size_t k = 0; k < d; ++k) names.push_back("d_" + base + std::to_string(k));
    for (std::size_t k = 0; k < d; ++k) names.push_back("dd_" + base + std::to_string(k));
  }
  names.emplace_back("zcr");
  names.emplace_back("kurtosis");
  return names;
}

Matrix frame_feature_matrix(const corpus::CoughSegment& segment, const Matrix& statics,
                            const FeatureConfig& config, std::vector<std::string>* warnings) {
  const std::vector<dsp::Frame> frames = segment_frames(segment.samples, config, nullptr);
  if (frames.size() != statics.rows()) {
    throw std::invalid_argument("frame_feature_matrix: static matrix has the wrong frame count");
  }
  Matrix d;
  Matrix dd;
  if (config.include_deltas) std::tie(d, dd) = deltas(statics, config.delta_window);

  const std::size_t sd = config.static_dim();
  Matrix rows(frames.size(), config.frame_dim());
  std::size_t degenerate = 0;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    auto row = rows.row(t);
    std::size_t col = 0;
    for (std::size_t k = 0; k < sd; ++k) row[col++] = statics(t, k);
    if (config.include_deltas) {
      for (std::size_t k = 0; k < sd; ++k) row[col++] = d(t, k);
      for (std::size_t k = 0; k < sd; ++k) row[col++] = dd(t, k);
    }
    row[col++] = zcr(frames[t].samples);
    try {
      row[col] = kurtosis(frames[t].samples);
    } catch (const DegenerateFrameError&) {
      row[col] = 0.0;
      ++degenerate;
    }
  }
  if (degenerate > 0 && warnings) {
    warnings->push_back(std::to_string(degenerate) +
                        " zero-variance frame(s); kurtosis set to 0 for those frames");
  }
  return rows;
}

std::vector<double> section_average(const Matrix& frame_rows, std::size_t sections) {
  if (sections == 0) throw std::invalid_argument("section_average: sections must be positive");
  if (frame_rows.rows() < sections) {
    throw std::invalid_argument("section_average: fewer frames than sections");
  }
  const std::size_t n = frame_rows.rows();
  const std::size_t width = frame_rows.cols();
  const std::size_t base = n / sections;
  const std::size_t extra = n % sections;
  std::vector<double> out;
  out.reserve(sections * width);
  std::size_t start = 0;
  for (std::size_t s = 0; s < sections; ++s) {
    const std::size_t count = base + (s < extra ? 1 : 0);
    std::vector<double> mean(width, 0.0);
    for (std::size_t r = start; r < start + count; ++r) {
      for (std::size_t c = 0; c < width; ++c) mean[c] += frame_rows(r, c);
    }
    for (double& v : mean) v /= static_cast<double>(count);
    out.insert(out.end(), mean.begin(), mean.end());
    start += count;
  }
  return out;
}

FeatureVector assemble(const corpus::CoughSegment& segment, const FeatureConfig& config) {
  config.validate();
  const dsp::FilterBank bank = config.make_filterbank();
  std::vector<std::string> warnings;
  if (bank.empty_filters() > 0) warnings.push_back(empty_filter_warning(bank));
  Matrix statics =
      static_frames(segment_frames(segment.samples, config, &warnings), config, bank);
  if (config.kind == FeatureKind::kMfcc) {
    Matrix* one[] = {&statics};
    subtract_column_means(one);
  }
  const Matrix rows = frame_feature_matrix(segment, statics, config, &warnings);
  return finish_vector(rows, config, rows.rows(), std::move(warnings));
}

std::vector<CoughFeatures> extract(std::span<const corpus::CoughSegment> segments,
                                   const FeatureConfig& config, bool keep_frames) {
  config.validate();
  if (segments.empty()) throw DataError("feature extraction: no segments");
  const dsp::FilterBank bank = config.make_filterbank();

  std::vector<Matrix> statics(segments.size());
  std::vector<std::vector<std::string>> warnings(segments.size());
  parallel_for(segments.size(), [&](std::size_t i) {
    try {
      if (bank.empty_filters() > 0) warnings[i].push_back(empty_filter_warning(bank));
      statics[i] = static_frames(segment_frames(segments[i].samples, config, &warnings[i]),
                                 config, bank);
    } catch (const Error& e) {
      throw DataError("cough " + segments[i].cough_id + " (patient " + segments[i].patient_id +
                      "): " + e.what());
    }
  });

  if (config.kind == FeatureKind::kMfcc) {
    std::vector<std::string> ids;
    ids.reserve(segments.size());
    for (const auto& s : segments) ids.push_back(s.recording_id);
    cepstral_mean_normalize(statics, ids);
  }

  std::vector<CoughFeatures> out(segments.size());
  parallel_for(segments.size(), [&](std::size_t i) {
    Matrix rows = frame_feature_matrix(segments[i], statics[i], config, &warnings[i]);
    out[i].vector = finish_vector(rows, config, rows.rows(), std::move(warnings[i]));
    if (keep_frames) out[i].frames = std::move(rows);
  });
  return out;
}

}  // namespace coughscreen::features
