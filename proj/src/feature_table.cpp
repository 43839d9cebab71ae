#include "coughscreen/feature_table.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace coughscreen::features {

std::vector<std::string> FeatureTable::patients() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& p : patient_ids) {
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

int FeatureTable::patient_label(const std::string& patient_id) const {
  int label = -1;
  for (std::size_t r = 0; r < rows(); ++r) {
    if (patient_ids[r] != patient_id) continue;
    if (label >= 0 && labels[r] != label) {
      throw DataError("patient " + patient_id + " has rows with different labels");
    }
    label = labels[r];
  }
  if (label < 0) throw DataError("patient " + patient_id + " has no feature rows");
  return label;
}

FeatureTable FeatureTable::select_patients(const std::set<std::string>& patients) const {
  FeatureTable out;
  out.names = names;
  out.values = Matrix(0, dimension());
  for (std::size_t r = 0; r < rows(); ++r) {
    if (!patients.count(patient_ids[r])) continue;
    out.values.append_row(values.row(r));
    out.patient_ids.push_back(patient_ids[r]);
    out.cough_ids.push_back(cough_ids[r]);
    out.labels.push_back(labels[r]);
    out.frames.push_back(frames[r]);
  }
  return out;
}

FeatureTable FeatureTable::select_columns(std::span<const std::size_t> columns) const {
  FeatureTable out;
  out.patient_ids = patient_ids;
  out.cough_ids = cough_ids;
  out.labels = labels;
  out.frames = frames;
  out.values = Matrix(rows(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] >= dimension()) throw std::out_of_range("select_columns: column out of range");
    out.names.push_back(names[columns[c]]);
    for (std::size_t r = 0; r < rows(); ++r) out.values(r, c) = values(r, columns[c]);
  }
  return out;
}

void FeatureTable::validate() const {
  const std::size_t n = rows();
  if (patient_ids.size() != n || cough_ids.size() != n || labels.size() != n ||
      frames.size() != n) {
    throw DataError("feature table: column lengths disagree");
  }
  if (names.size() != dimension()) throw DataError("feature table: header/width mismatch");
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) throw DataError("feature table: duplicate feature names");
  for (int label : labels) {
    if (label != 0 && label != 1) throw DataError("feature table: labels must be 0 or 1");
  }
  for (double v : values.data()) {
    if (!std::isfinite(v)) throw DataError("feature table: non-finite feature value");
  }
  std::map<std::string, std::string> owner;
  for (std::size_t r = 0; r < n; ++r) {
    auto [it, inserted] = owner.emplace(cough_ids[r], patient_ids[r]);
    if (!inserted && it->second != patient_ids[r]) {
      throw DataError("feature table: cough " + cough_ids[r] + " belongs to two patients");
    }
  }
}

FeatureTable cough_table(const corpus::Corpus& corpus, std::span<const CoughFeatures> features) {
  if (features.size() != corpus.segments.size()) {
    throw std::invalid_argument("cough_table: one feature vector per segment required");
  }
  if (features.empty()) throw DataError("corpus has no coughs");
  FeatureTable t;
  t.names = features.front().vector.names;
  t.values = Matrix(0, t.names.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& seg = corpus.segments[i];
    t.values.append_row(features[i].vector.values);
    t.patient_ids.push_back(seg.patient_id);
    t.cough_ids.push_back(seg.cough_id);
    t.labels.push_back(corpus.patient(seg.patient_id).tb ? 1 : 0);
    t.frames.push_back(features[i].vector.n_frames);
  }
  return t;
}

FeatureTable frame_table(const corpus::Corpus& corpus, std::span<const CoughFeatures> features,
                         const FeatureConfig& config) {
  if (features.size() != corpus.segments.size()) {
    throw std::invalid_argument("frame_table: one feature entry per segment required");
  }
  if (features.empty()) throw DataError("corpus has no coughs");
  FeatureTable t;
  t.names = frame_feature_names(config);
  t.values = Matrix(0, t.names.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& seg = corpus.segments[i];
    const Matrix& frames = features[i].frames;
    if (frames.cols() != t.names.size() || frames.rows() == 0) {
      throw std::invalid_argument("frame_table: features were extracted without frame rows");
    }
    const int label = corpus.patient(seg.patient_id).tb ? 1 : 0;
    for (std::size_t r = 0; r < frames.rows(); ++r) {
      t.values.append_row(frames.row(r));
      t.patient_ids.push_back(seg.patient_id);
      t.cough_ids.push_back(seg.cough_id);
      t.labels.push_back(label);
      t.frames.push_back(1);
    }
  }
  return t;
}

void write_csv(const FeatureTable& table, const std::filesystem::path& path) {
  table.validate();
  std::ostringstream out;
  out << "patient_id,cough_id,label,n_frames";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << table.patient_ids[r] << ',' << table.cough_ids[r] << ',' << table.labels[r] << ','
        << table.frames[r];
    for (double v : table.values.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << out.str();
  if (!f) throw DataError("failed writing " + path.string());
}

FeatureTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open feature table " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw DataError(path.string() + ": empty feature table");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line, ',');
  const std::vector<std::string> fixed = {"patient_id", "cough_id", "label", "n_frames"};
  if (header.size() <= fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw DataError(path.string() + ": header must start with " +
                    "patient_id,cough_id,label,n_frames and name at least one feature");
  }
  FeatureTable t;
  t.names.assign(header.begin() + 4, header.end());
  t.values = Matrix(0, t.names.size());
  std::vector<double> row(t.names.size());
  std::size_t line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const std::vector<std::string> cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    t.patient_ids.push_back(cells[0]);
    t.cough_ids.push_back(cells[1]);
    const long long label = parse_int(cells[2], where + " label");
    if (label != 0 && label != 1) throw DataError(where + ": label must be 0 or 1");
    t.labels.push_back(static_cast<int>(label));
    const long long frames = parse_int(cells[3], where + " n_frames");
    if (frames < 1) throw DataError(where + ": n_frames must be >= 1");
    t.frames.push_back(static_cast<std::size_t>(frames));
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = parse_double(cells[c + 4], where + " " + t.names[c]);
    }
    t.values.append_row(row);
  }
  if (t.rows() == 0) throw DataError(path.string() + ": feature table has no rows");
  t.validate();
  return t;
}

}  // namespace coughscreen::features
