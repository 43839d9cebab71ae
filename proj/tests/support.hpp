#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "coughscreen/common.hpp"
#include "coughscreen/corpus.hpp"
#include "coughscreen/feature_table.hpp"

namespace testing_support {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("coughscreen_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::vector<double> sine(double hz, double rate, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  }
  return x;
}

inline std::vector<double> uniform_noise(std::size_t n, double amp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

inline std::vector<double> gaussian_noise(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

inline coughscreen::corpus::CoughSegment segment(std::vector<double> samples,
                                                 const std::string& recording = "r1",
                                                 const std::string& patient = "P1",
                                                 int index = 0) {
  coughscreen::corpus::CoughSegment s;
  s.patient_id = patient;
  s.recording_id = recording;
  s.sample_rate_hz = 44100;
  s.end_s = static_cast<double>(samples.size()) / 44100.0;
  s.samples = std::move(samples);
  s.cough_id = recording + ":" + std::to_string(index);
  return s;
}

/// Table with `patients` patients per class, `coughs` rows per patient and
/// the given columns. Column 0 carries the class signal when `signal` > 0;
/// all other columns are unit Gaussian noise.
inline coughscreen::features::FeatureTable planted_table(std::size_t patients, std::size_t coughs,
                                                         std::size_t columns, double signal,
                                                         std::uint64_t seed,
                                                         std::size_t signal_column = 0) {
  coughscreen::features::FeatureTable t;
  for (std::size_t c = 0; c < columns; ++c) t.names.push_back("f" + std::to_string(c));
  t.values = coughscreen::Matrix(0, columns);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  char name[16];
  for (std::size_t p = 0; p < 2 * patients; ++p) {
    const int label = p < patients ? 1 : 0;
    std::snprintf(name, sizeof name, "P%03zu", p);
    for (std::size_t k = 0; k < coughs; ++k) {
      std::vector<double> row(columns);
      for (auto& v : row) v = g(rng);
      row[signal_column] += signal * (label == 1 ? 1.0 : -1.0);
      t.values.append_row(row);
      t.patient_ids.push_back(name);
      t.cough_ids.push_back(std::string(name) + "_r1:" + std::to_string(k));
      t.labels.push_back(label);
      t.frames.push_back(10);
    }
  }
  return t;
}

}  // namespace testing_support
