#include "coughscreen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "coughscreen/common.hpp"
#include "coughscreen/parallel.hpp"
#include "coughscreen/wav.hpp"

namespace coughscreen::corpus {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

struct RecordingLoad {
  std::vector<CoughSegment> segments;
  std::vector<SnrEstimate> snr;
};

RecordingLoad load_recording(const PatientRecord& record, const std::string& recording_path,
                             const Annotations& annotations,
                             const std::filesystem::path& audio_root, int expected_sample_rate) {
  std::filesystem::path path(recording_path);
  if (path.is_relative() && !audio_root.empty()) path = audio_root / path;
  const WavData wav = read_wav(path);
  if (expected_sample_rate > 0 && wav.sample_rate != expected_sample_rate) {
    throw DataError(path.string() + ": sample rate " + std::to_string(wav.sample_rate) +
                    " Hz does not match the expected " + std::to_string(expected_sample_rate) +
                    " Hz (resampling is not performed)");
  }

  const std::string recording_id = recording_id_for(recording_path);
  const std::vector<AnnotationSpan> spans = annotations.for_recording(recording_id);
  const double rate = static_cast<double>(wav.sample_rate);
  const auto n = static_cast<long long>(wav.samples.size());

  RecordingLoad out;
  std::size_t index = 0;
  for (const AnnotationSpan& span : spans) {
    const long long begin = std::llround(span.start_s * rate);
    const long long end = std::llround(span.end_s * rate);
    if (end > n) {
      throw DataError(path.string() + ": span " + format_double(span.start_s) + "-" +
                      format_double(span.end_s) + " s exceeds the recording duration " +
                      format_double(static_cast<double>(n) / rate) + " s");
    }
    if (!span.is_cough()) continue;
    CoughSegment seg;
    seg.patient_id = record.patient_id;
    seg.recording_id = recording_id;
    seg.start_s = span.start_s;
    seg.end_s = span.end_s;
    seg.sample_rate_hz = wav.sample_rate;
    seg.cough_id = recording_id + ":" + std::to_string(index++);
    seg.samples.assign(wav.samples.begin() + begin, wav.samples.begin() + std::max(begin, end));
    out.segments.push_back(std::move(seg));
  }
  if (!out.segments.empty()) {
    out.snr = estimate_cough_snr(wav.samples, rate, spans);
  }
  return out;
}

// Mean power of the samples inside (foreground) or outside (background) the spans.
struct PowerSums {
  double sum_sq = 0.0;
  std::size_t count = 0;
  double mean() const { return count == 0 ? 0.0 : sum_sq / static_cast<double>(count); }
};

std::vector<char> foreground_mask(std::size_t n, double sample_rate,
                                  std::span<const AnnotationSpan> spans) {
  std::vector<char> mask(n, 0);
  for (const AnnotationSpan& s : spans) {
    if (!s.is_foreground()) continue;
    const auto b = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(s.start_s * sample_rate), 0, static_cast<long long>(n)));
    const auto e = static_cast<std::size_t>(std::clamp<long long>(
        std::llround(s.end_s * sample_rate), 0, static_cast<long long>(n)));
    std::fill(mask.begin() + static_cast<std::ptrdiff_t>(b),
              mask.begin() + static_cast<std::ptrdiff_t>(std::max(b, e)), 1);
  }
  return mask;
}

PowerSums span_power(std::span<const double> samples, double sample_rate,
                     const AnnotationSpan& span) {
  PowerSums p;
  const auto n = static_cast<long long>(samples.size());
  const long long b = std::clamp<long long>(std::llround(span.start_s * sample_rate), 0, n);
  const long long e = std::clamp<long long>(std::llround(span.end_s * sample_rate), 0, n);
  for (long long i = b; i < e; ++i) {
    p.sum_sq += samples[static_cast<std::size_t>(i)] * samples[static_cast<std::size_t>(i)];
    ++p.count;
  }
  return p;
}

double background_power(std::span<const double> samples, double sample_rate,
                        std::span<const AnnotationSpan> spans) {
  const std::vector<char> mask = foreground_mask(samples.size(), sample_rate, spans);
  PowerSums bg;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (mask[i]) continue;
    bg.sum_sq += samples[i] * samples[i];
    ++bg.count;
  }
  if (bg.count == 0) throw DataError("SNR: recording has no background region outside annotations");
  return bg.mean();
}

SnrEstimate ratio_to_db(double signal, double noise) {
  if (noise <= 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(signal / noise), false};
}

}  // namespace

std::vector<PatientRecord> parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty manifest");
  const std::vector<std::string> header = split(trim(strip_cr(line)), ',');
  const std::vector<std::string> expected = {"patient_id", "tb_label", "recording_path", "age",
                                             "sex"};
  std::vector<std::string> trimmed;
  for (const auto& h : header) trimmed.push_back(trim(h));
  if (trimmed != expected) {
    throw DataError(path.string() +
                    ":1: header must be patient_id,tb_label,recording_path,age,sex");
  }

  std::vector<PatientRecord> records;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    std::vector<std::string> fields = split(line, ',');
    if (fields.size() != 5) {
      throw DataError(where + ": expected 5 fields, found " + std::to_string(fields.size()));
    }
    for (auto& f : fields) f = trim(f);

    PatientRecord rec;
    rec.patient_id = fields[0];
    if (rec.patient_id.empty()) throw DataError(where + ": empty patient_id");
    if (fields[1] == "1") {
      rec.tb = true;
    } else if (fields[1] == "0") {
      rec.tb = false;
    } else {
      throw DataError(where + ": tb_label must be 1 or 0, got '" + fields[1] + "'");
    }
    if (fields[2].empty()) throw DataError(where + ": empty recording_path");
    rec.recording_paths.push_back(fields[2]);
    if (!fields[3].empty()) {
      const long long age = parse_int(fields[3], where + ": age");
      if (age < 0) throw DataError(where + ": negative age");
      rec.age = static_cast<int>(age);
    }
    if (!fields[4].empty()) {
      const std::string sex = lower(fields[4]);
      if (sex == "m" || sex == "male") {
        rec.sex = Sex::kMale;
      } else if (sex == "f" || sex == "female") {
        rec.sex = Sex::kFemale;
      } else {
        throw DataError(where + ": unknown sex '" + fields[4] + "'");
      }
    }

    auto it = index.find(rec.patient_id);
    if (it == index.end()) {
      index.emplace(rec.patient_id, records.size());
      records.push_back(std::move(rec));
      continue;
    }
    PatientRecord& existing = records[it->second];
    if (existing.tb != rec.tb) {
      throw DataError(where + ": conflicting tb_label for patient " + rec.patient_id);
    }
    if (std::find(existing.recording_paths.begin(), existing.recording_paths.end(),
                  rec.recording_paths[0]) == existing.recording_paths.end()) {
      existing.recording_paths.push_back(rec.recording_paths[0]);
    }
    if (!existing.age) existing.age = rec.age;
    if (!existing.sex) existing.sex = rec.sex;
  }
  return records;
}

std::string recording_id_for(const std::string& recording_path) {
  return std::filesystem::path(recording_path).stem().string();
}

std::vector<AnnotationSpan> Annotations::coughs() const {
  std::vector<std::string> order;
  for (const auto& s : spans) {
    if (std::find(order.begin(), order.end(), s.recording_id) == order.end()) {
      order.push_back(s.recording_id);
    }
  }
  std::vector<AnnotationSpan> out;
  for (const auto& id : order) {
    for (auto& s : for_recording(id)) {
      if (s.is_cough()) out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<AnnotationSpan> Annotations::for_recording(const std::string& recording_id) const {
  std::vector<AnnotationSpan> out;
  for (const auto& s : spans) {
    if (s.recording_id == recording_id) out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(), [](const AnnotationSpan& a, const AnnotationSpan& b) {
    return a.start_s < b.start_s;
  });
  return out;
}

Annotations parse_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file " + path.string());
  Annotations out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (trim(line).empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::vector<std::string> fields = split(line, '\t');
    if (fields.size() != 4) {
      throw DataError(where + ": expected 4 tab-separated fields, found " +
                      std::to_string(fields.size()));
    }
    AnnotationSpan span;
    span.recording_id = trim(fields[0]);
    span.start_s = parse_double(fields[1], where + ": start_s");
    span.end_s = parse_double(fields[2], where + ": end_s");
    span.label = trim(fields[3]);
    if (span.recording_id.empty()) throw DataError(where + ": empty recording_id");
    if (span.start_s < 0.0 || span.end_s < 0.0) throw DataError(where + ": negative time");
    if (!(span.start_s < span.end_s)) {
      throw DataError(where + ": start " + fields[1] + " is not before end " + fields[2]);
    }
    out.spans.push_back(std::move(span));
  }
  return out;
}

std::vector<CoughSegment> load_segments(const PatientRecord& record,
                                        const Annotations& annotations,
                                        const std::filesystem::path& audio_root,
                                        int expected_sample_rate) {
  std::vector<CoughSegment> out;
  for (const auto& rec_path : record.recording_paths) {
    RecordingLoad r = load_recording(record, rec_path, annotations, audio_root,
                                     expected_sample_rate);
    std::move(r.segments.begin(), r.segments.end(), std::back_inserter(out));
  }
  return out;
}

SnrEstimate estimate_snr(std::span<const double> samples, double sample_rate,
                         std::span<const AnnotationSpan> spans) {
  PowerSums fg;
  for (const auto& s : spans) {
    if (!s.is_cough()) continue;
    const PowerSums p = span_power(samples, sample_rate, s);
    fg.sum_sq += p.sum_sq;
    fg.count += p.count;
  }
  if (fg.count == 0) throw DataError("SNR: no cough samples in the foreground");
  return ratio_to_db(fg.mean(), background_power(samples, sample_rate, spans));
}

std::vector<SnrEstimate> estimate_cough_snr(std::span<const double> samples, double sample_rate,
                                            std::span<const AnnotationSpan> spans) {
  const double noise = background_power(samples, sample_rate, spans);
  std::vector<const AnnotationSpan*> coughs;
  for (const auto& s : spans) {
    if (s.is_cough()) coughs.push_back(&s);
  }
  std::stable_sort(coughs.begin(), coughs.end(),
                   [](const auto* a, const auto* b) { return a->start_s < b->start_s; });
  std::vector<SnrEstimate> out;
  for (const auto* s : coughs) {
    const PowerSums p = span_power(samples, sample_rate, *s);
    if (p.count == 0) throw DataError("SNR: empty cough span");
    out.push_back(ratio_to_db(p.mean(), noise));
  }
  return out;
}

ClassSummary summarize_class(std::span<const CoughInfo> coughs) {
  ClassSummary s;
  std::set<std::string> patients;
  double snr_sum = 0.0;
  for (const auto& c : coughs) {
    patients.insert(c.patient_id);
    ++s.coughs;
    s.total_length_s += c.length_s;
    if (!c.snr.degenerate && std::isfinite(c.snr.db)) {
      ++s.snr_count;
      snr_sum += c.snr.db;
    }
  }
  s.patients = patients.size();
  if (s.coughs == 0) return s;
  s.mean_coughs_per_patient = static_cast<double>(s.coughs) / static_cast<double>(s.patients);
  s.mean_length_s = s.total_length_s / static_cast<double>(s.coughs);
  if (s.snr_count > 0) {
    s.snr_mean_db = snr_sum / static_cast<double>(s.snr_count);
    double m2 = 0.0;
    for (const auto& c : coughs) {
      if (c.snr.degenerate || !std::isfinite(c.snr.db)) continue;
      m2 += (c.snr.db - s.snr_mean_db) * (c.snr.db - s.snr_mean_db);
    }
    s.snr_sd_db = s.snr_count > 1 ? std::sqrt(m2 / static_cast<double>(s.snr_count - 1)) : 0.0;
  }
  return s;
}

ClassSummary combine(const ClassSummary& a, const ClassSummary& b) {
  ClassSummary s;
  s.patients = a.patients + b.patients;
  s.coughs = a.coughs + b.coughs;
  s.total_length_s = a.total_length_s + b.total_length_s;
  if (s.patients > 0) {
    s.mean_coughs_per_patient = static_cast<double>(s.coughs) / static_cast<double>(s.patients);
  }
  if (s.coughs > 0) s.mean_length_s = s.total_length_s / static_cast<double>(s.coughs);
  s.snr_count = a.snr_count + b.snr_count;
  if (s.snr_count > 0) {
    const double na = static_cast<double>(a.snr_count);
    const double nb = static_cast<double>(b.snr_count);
    const double n = na + nb;
    s.snr_mean_db = (na * a.snr_mean_db + nb * b.snr_mean_db) / n;
    const double m2a = a.snr_count > 1 ? a.snr_sd_db * a.snr_sd_db * (na - 1.0) : 0.0;
    const double m2b = b.snr_count > 1 ? b.snr_sd_db * b.snr_sd_db * (nb - 1.0) : 0.0;
    const double delta = b.snr_mean_db - a.snr_mean_db;
    const double m2 = m2a + m2b + delta * delta * na * nb / n;
    s.snr_sd_db = s.snr_count > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  }
  return s;
}

CorpusSummary summarize(std::span<const CoughInfo> coughs) {
  if (coughs.empty()) throw DataError("summarize: empty corpus");
  std::vector<CoughInfo> tb;
  std::vector<CoughInfo> non_tb;
  for (const auto& c : coughs) (c.tb ? tb : non_tb).push_back(c);
  CorpusSummary out;
  out.tb = summarize_class(tb);
  out.non_tb = summarize_class(non_tb);
  out.total = summarize_class(coughs);
  return out;
}

const PatientRecord& Corpus::patient(const std::string& patient_id) const {
  for (const auto& p : patients) {
    if (p.patient_id == patient_id) return p;
  }
  throw DataError("unknown patient " + patient_id);
}

std::vector<CoughInfo> Corpus::cough_infos() const {
  std::map<std::string, bool> label;
  for (const auto& p : patients) label[p.patient_id] = p.tb;
  std::vector<CoughInfo> out;
  out.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    out.push_back({segments[i].patient_id, label.at(segments[i].patient_id),
                   segments[i].duration(), snr[i]});
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& manifest, const std::filesystem::path& annotations,
                   const std::filesystem::path& audio_root, int expected_sample_rate) {
  Corpus corpus;
  corpus.patients = parse_manifest(manifest);
  const Annotations ann = parse_annotations(annotations);
  const std::filesystem::path root = audio_root.empty() ? manifest.parent_path() : audio_root;

  std::map<std::string, std::string> owner;
  for (const auto& p : corpus.patients) {
    for (const auto& r : p.recording_paths) {
      const std::string id = recording_id_for(r);
      auto [it, inserted] = owner.emplace(id, p.patient_id);
      if (!inserted && it->second != p.patient_id) {
        throw DataError("recording id '" + id + "' is shared by patients " + it->second +
                        " and " + p.patient_id);
      }
    }
  }
  for (const auto& s : ann.spans) {
    if (!owner.contains(s.recording_id)) {
      throw DataError("annotation references recording '" + s.recording_id +
                      "' that is not in the manifest");
    }
  }

  struct Job {
    const PatientRecord* record;
    std::string path;
  };
  std::vector<Job> jobs;
  for (const auto& p : corpus.patients) {
    for (const auto& r : p.recording_paths) jobs.push_back({&p, r});
  }
  std::vector<RecordingLoad> loads(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    loads[i] = load_recording(*jobs[i].record, jobs[i].path, ann, root, expected_sample_rate);
  });
  for (auto& l : loads) {
    std::move(l.segments.begin(), l.segments.end(), std::back_inserter(corpus.segments));
    corpus.snr.insert(corpus.snr.end(), l.snr.begin(), l.snr.end());
  }
  return corpus;
}

}  // namespace coughscreen::corpus
