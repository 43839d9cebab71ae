#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "coughscreen/common.hpp"
#include "coughscreen/corpus.hpp"
#include "coughscreen/features.hpp"

namespace coughscreen::features {

/// Labelled feature rows. A row is either a whole cough (sectioned vector)
/// or one frame of a cough; rows of the same cough share `cough_ids`.
struct FeatureTable {
  std::vector<std::string> names;
  Matrix values;
  std::vector<std::string> patient_ids;
  std::vector<std::string> cough_ids;
  std::vector<int> labels;
  /// Frames represented by the row: the cough's frame count for whole-cough
  /// rows, 1 for frame rows.
  std::vector<std::size_t> frames;

  std::size_t rows() const { return values.rows(); }
  std::size_t dimension() const { return values.cols(); }
  /// Distinct patient ids in first-appearance order.
  std::vector<std::string> patients() const;
  /// Label of each patient; throws DataError if a patient's rows disagree.
  int patient_label(const std::string& patient_id) const;

  /// Rows whose patient is in `patients`, keeping row order.
  FeatureTable select_patients(const std::set<std::string>& patients) const;
  /// Keeps the given columns, in the given order.
  FeatureTable select_columns(std::span<const std::size_t> columns) const;

  void validate() const;
};

/// One row per cough: the sectioned feature vector.
FeatureTable cough_table(const corpus::Corpus& corpus, std::span<const CoughFeatures> features);
/// One row per frame: the un-sectioned frame rows (requires keep_frames).
FeatureTable frame_table(const corpus::Corpus& corpus, std::span<const CoughFeatures> features,
                         const FeatureConfig& config);

/// CSV: `patient_id,cough_id,label,n_frames,<feature names...>`.
void write_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_csv(const std::filesystem::path& path);

}  // namespace coughscreen::features
