#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace coughscreen::corpus {

struct WavData {
  int sample_rate = 0;
  int bits_per_sample = 0;
  /// Mono samples scaled by 1 / 2^(bits - 1).
  std::vector<double> samples;
};

/// Reads a RIFF/WAVE file holding mono integer PCM (16, 24 or 32 bit).
/// Anything else is reported as an unsupported encoding (DataError).
WavData read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM. Samples are clipped to [-1, 1] and rounded.
void write_wav16(const std::filesystem::path& path, std::span<const double> samples,
                 int sample_rate);

}  // namespace coughscreen::corpus
