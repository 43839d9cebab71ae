// Synthetic two-class cough corpora with known ground truth.
//
// Each patient gets one recording: uniform background noise throughout, a
// spoken-digit stand-in (harmonic tone, label "s"), a breath (soft band-passed
// noise, label "b") and `coughs_per_patient` coughs (label "c"). A cough is
// Gaussian noise through two cascaded resonators at a centre frequency
//
//   fc = 1500 Hz * 2^(class_shift + patient_jitter + cough_jitter),
//   class_shift = +separability / 2 for TB and -separability / 2 otherwise,
//
// shaped by a two-onset attack/decay envelope and scaled so that the cough
// span's mean power over the background power hits the requested SNR.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "coughscreen/common.hpp"
#include "coughscreen/corpus.hpp"
#include "coughscreen/parallel.hpp"
#include "coughscreen/wav.hpp"

namespace coughscreen::corpus {
namespace {

constexpr double kBaseCentreHz = 1500.0;
constexpr double kNoiseAmplitude = 0.003;
constexpr double kPatientJitterOctaves = 0.15;
constexpr double kCoughJitterOctaves = 0.08;

class Biquad {
 public:
  static Biquad bandpass(double centre_hz, double q, double sample_rate) {
    const double w0 = 2.0 * std::numbers::pi * centre_hz / sample_rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f;
    f.b0_ = alpha / a0;
    f.b1_ = 0.0;
    f.b2_ = -alpha / a0;
    f.a1_ = -2.0 * std::cos(w0) / a0;
    f.a2_ = (1.0 - alpha) / a0;
    return f;
  }

  double step(double x) {
    const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double b0_ = 0, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

void scale_to_power(std::vector<double>& x, double target_power) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p /= static_cast<double>(std::max<std::size_t>(1, x.size()));
  if (p <= 0.0) return;
  const double g = std::sqrt(target_power / p);
  for (double& v : x) v *= g;
}

std::vector<double> make_cough(std::size_t n, double centre_hz, double sample_rate,
                               std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Biquad f1 = Biquad::bandpass(centre_hz, 1.5, sample_rate);
  Biquad f2 = Biquad::bandpass(centre_hz, 1.5, sample_rate);
  std::vector<double> x(n);
  for (auto& v : x) v = f2.step(f1.step(gauss(rng)));

  const double duration = static_cast<double>(n) / sample_rate;
  const double second_onset = (0.35 + 0.2 * unit(rng)) * duration;
  const double attack = 0.015;
  const double decay = duration / 3.0;
  auto onset = [&](double t, double t0) {
    if (t < t0) return 0.0;
    const double dt = t - t0;
    return dt < attack ? dt / attack : std::exp(-(dt - attack) / decay);
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    x[i] *= std::max(onset(t, 0.0), 0.8 * onset(t, second_onset));
  }
  return x;
}

std::vector<double> make_speech(std::size_t n, double sample_rate) {
  std::vector<double> x(n, 0.0);
  const double f0 = 140.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    for (int k = 1; k <= 8; ++k) {
      x[i] += std::sin(2.0 * std::numbers::pi * f0 * k * t) / k;
    }
  }
  return x;
}

std::vector<double> make_breath(std::size_t n, double sample_rate, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Biquad f = Biquad::bandpass(400.0, 0.7, sample_rate);
  std::vector<double> x(n);
  for (auto& v : x) v = f.step(gauss(rng));
  return x;
}

struct Span {
  std::size_t begin;
  std::size_t end;
  char label;
};

struct Recording {
  std::vector<double> samples;
  std::vector<Span> spans;
};

Recording make_recording(const SyntheticConfig& cfg, bool tb, std::size_t patient_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                    static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(patient_index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double rate = static_cast<double>(cfg.sample_rate);
  auto samples_for = [rate](double seconds) {
    return static_cast<std::size_t>(std::llround(seconds * rate));
  };
  const double noise_power = kNoiseAmplitude * kNoiseAmplitude / 3.0;
  const double cough_power = noise_power * (std::pow(10.0, cfg.snr_db / 10.0) - 1.0);
  const double class_shift = (tb ? 0.5 : -0.5) * cfg.separability;
  const double patient_shift = kPatientJitterOctaves * gauss(rng);

  Recording rec;
  std::vector<std::vector<double>> pieces;
  std::size_t cursor = samples_for(0.5);

  auto place = [&](std::vector<double> piece, char label) {
    rec.spans.push_back({cursor, cursor + piece.size(), label});
    cursor += piece.size();
    pieces.push_back(std::move(piece));
  };
  auto gap = [&](double lo, double hi) { cursor += samples_for(lo + (hi - lo) * unit(rng)); };

  if (cfg.speech_and_breath) {
    auto speech = make_speech(samples_for(1.0), rate);
    scale_to_power(speech, 0.5 * cough_power);
    place(std::move(speech), 's');
    gap(0.3, 0.5);
  }
  for (std::size_t c = 0; c < cfg.coughs_per_patient; ++c) {
    if (cfg.speech_and_breath && c == cfg.coughs_per_patient / 2) {
      auto breath = make_breath(samples_for(0.6), rate, rng);
      scale_to_power(breath, 0.05 * cough_power);
      place(std::move(breath), 'b');
      gap(0.25, 0.6);
    }
    const double duration = cfg.min_cough_s + (cfg.max_cough_s - cfg.min_cough_s) * unit(rng);
    const double centre =
        kBaseCentreHz * std::exp2(class_shift + patient_shift + kCoughJitterOctaves * gauss(rng));
    auto cough = make_cough(std::max<std::size_t>(1, samples_for(duration)), centre, rate, rng);
    scale_to_power(cough, cough_power);
    place(std::move(cough), 'c');
    gap(0.25, 0.6);
  }
  cursor += samples_for(0.5);

  rec.samples.resize(cursor);
  std::uniform_real_distribution<double> noise(-kNoiseAmplitude, kNoiseAmplitude);
  for (auto& v : rec.samples) v = noise(rng);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    for (std::size_t k = 0; k < pieces[i].size(); ++k) {
      rec.samples[rec.spans[i].begin + k] += pieces[i][k];
    }
  }
  return rec;
}

std::string patient_name(std::size_t index) {
  std::ostringstream s;
  s << 'P';
  s.width(3);
  s.fill('0');
  s << index + 1;
  return s.str();
}

}  // namespace

SyntheticConfig SyntheticConfig::preset(const std::string& name) {
  SyntheticConfig c;
  if (name == "easy") {
    c.separability = 1.0;
  } else if (name == "hard") {
    c.separability = 0.25;
  } else if (name == "null") {
    c.separability = 0.0;
  } else {
    throw ConfigError("unknown synthetic preset '" + name + "' (expected easy, hard or null)");
  }
  return c;
}

void SyntheticConfig::validate() const {
  if (n_classes != 2) throw ConfigError("synthetic corpora have exactly 2 classes");
  if (patients_per_class == 0) throw ConfigError("patients_per_class must be positive");
  if (coughs_per_patient == 0) throw ConfigError("coughs_per_patient must be positive");
  if (!(separability >= 0.0) || !std::isfinite(separability)) {
    throw ConfigError("separability must be a finite value >= 0");
  }
  if (!(snr_db > 0.0) || snr_db > 80.0) throw ConfigError("snr_db must be in (0, 80]");
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  if (!(min_cough_s > 0.0) || !(max_cough_s >= min_cough_s)) {
    throw ConfigError("need 0 < min_cough_s <= max_cough_s");
  }
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& config,
                                   const std::filesystem::path& out_dir) {
  config.validate();
  SyntheticCorpus out;
  out.manifest = out_dir / "manifest.csv";
  out.annotations = out_dir / "annotations.tsv";
  out.audio_dir = out_dir / "audio";
  std::error_code ec;
  std::filesystem::create_directories(out.audio_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out.audio_dir.string());

  // TB patients first, then non-TB.
  const std::size_t n_patients = 2 * config.patients_per_class;
  std::vector<Recording> recordings(n_patients);
  parallel_for(n_patients, [&](std::size_t i) {
    const bool tb = i < config.patients_per_class;
    recordings[i] = make_recording(config, tb, i);
    write_wav16(out.audio_dir / (patient_name(i) + "_r1.wav"), recordings[i].samples,
                config.sample_rate);
  });

  std::ostringstream manifest;
  std::ostringstream annotations;
  manifest << "patient_id,tb_label,recording_path,age,sex\n";
  const double rate = static_cast<double>(config.sample_rate);
  for (std::size_t i = 0; i < n_patients; ++i) {
    const bool tb = i < config.patients_per_class;
    const std::string id = patient_name(i);
    const std::string recording = id + "_r1";
    manifest << id << ',' << (tb ? 1 : 0) << ",audio/" << recording << ".wav," << 20 + (i * 7) % 45
             << ',' << (i % 2 == 0 ? 'M' : 'F') << '\n';
    ++out.patients[tb ? 1 : 0];
    for (const Span& s : recordings[i].spans) {
      annotations << recording << '\t' << format_double(static_cast<double>(s.begin) / rate)
                  << '\t' << format_double(static_cast<double>(s.end) / rate) << '\t' << s.label
                  << '\n';
      if (s.label == 'c') {
        ++out.coughs[tb ? 1 : 0];
        out.total_length_s[tb ? 1 : 0] += static_cast<double>(s.end) / rate -
                                          static_cast<double>(s.begin) / rate;
      }
    }
  }

  auto write_text = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
    if (!f) throw DataError("failed writing " + path.string());
  };
  write_text(out.manifest, manifest.str());
  write_text(out.annotations, annotations.str());
  return out;
}

}  // namespace coughscreen::corpus
