#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "coughscreen/common.hpp"

namespace coughscreen::dsp {

struct Frame {
  std::vector<double> samples;
  std::size_t start_index = 0;
};

/// Splits a signal into frames of `frame_length` samples advanced by `hop`.
/// A trailing remainder shorter than a frame is dropped. A signal shorter than
/// one frame yields a single zero-padded frame so that no cough is discarded.
std::vector<Frame> frame_signal(std::span<const double> samples, std::size_t frame_length,
                                std::size_t hop);

enum class Window { kRectangular, kHamming };

/// Window coefficients of length n (symmetric Hamming).
std::vector<double> window_coefficients(Window window, std::size_t n);

bool is_power_of_two(std::size_t n);

/// One-sided periodogram |X(k)|^2 / N for k = 0 .. N/2. N must be a power of two.
std::vector<double> power_spectrum(std::span<const double> frame);

/// Mean squared amplitude implied by a one-sided periodogram (Parseval with
/// the 1/N convention): interior bins count twice, DC and Nyquist once.
double spectrum_mean_power(std::span<const double> spectrum);

double mel(double hz);
double mel_inverse(double mel_value);

enum class FilterKind { kMel, kLinear };

struct FilterBank {
  FilterKind kind = FilterKind::kMel;
  std::size_t n_filters = 0;
  std::size_t frame_length = 0;
  double sample_rate = 0.0;
  /// n_filters + 2 edge frequencies in Hz; filter i spans edges[i]..edges[i+2].
  std::vector<double> edges_hz;
  /// n_filters rows over frame_length / 2 + 1 FFT bins.
  Matrix weights;
  /// Per-row half-open range of bins with nonzero weight.
  std::vector<std::size_t> first_bin;
  std::vector<std::size_t> end_bin;

  std::vector<double> center_frequencies() const;
  /// Number of rows without a single nonzero bin.
  std::size_t empty_filters() const;
  /// Applies the bank to a power spectrum, returning one energy per filter.
  std::vector<double> apply(std::span<const double> spectrum) const;
};

/// Triangular filters with unit peak. Mel banks have edges equally spaced on
/// the mel axis and triangles linear in mel; linear banks are equally spaced
/// in Hz. Edges run from 0 Hz to Nyquist. With `strict`, a filter that
/// covers no FFT bin is an error.
FilterBank build_filterbank(FilterKind kind, std::size_t n_filters, std::size_t frame_length,
                            double sample_rate, bool strict = true);

/// Orthonormal DCT-II of `input`, returning the first n_keep coefficients.
std::vector<double> dct_ii(std::span<const double> input, std::size_t n_keep);
/// Inverse of the full orthonormal DCT-II (i.e. DCT-III).
std::vector<double> dct_ii_inverse(std::span<const double> coefficients);

}  // namespace coughscreen::dsp
