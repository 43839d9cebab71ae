#include "coughscreen/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

namespace coughscreen::dsp {
namespace {

// FFTW planning is not thread-safe; execution on fresh arrays with the
// new-array interface is. Plans are cached per length and never destroyed.
class PlanCache {
 public:
  fftw_plan get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

struct FftwRealDeleter {
  void operator()(double* p) const { fftw_free(p); }
};
struct FftwComplexDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

}  // namespace

std::vector<Frame> frame_signal(std::span<const double> samples, std::size_t frame_length,
                                std::size_t hop) {
  if (frame_length == 0) throw std::invalid_argument("frame_signal: frame length must be positive");
  if (hop == 0) throw std::invalid_argument("frame_signal: hop must be positive");
  std::vector<Frame> frames;
  if (samples.size() < frame_length) {
    Frame f;
    f.samples.assign(frame_length, 0.0);
    std::copy(samples.begin(), samples.end(), f.samples.begin());
    frames.push_back(std::move(f));
    return frames;
  }
  for (std::size_t start = 0; start + frame_length <= samples.size(); start += hop) {
    Frame f;
    f.start_index = start;
    f.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(start),
                     samples.begin() + static_cast<std::ptrdiff_t>(start + frame_length));
    frames.push_back(std::move(f));
  }
  return frames;
}

std::vector<double> window_coefficients(Window window, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (window == Window::kHamming && n > 1) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(n - 1));
    }
  }
  return w;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<double> power_spectrum(std::span<const double> frame) {
  const std::size_t n = frame.size();
  if (!is_power_of_two(n) || n < 2) {
    throw std::invalid_argument("power_spectrum: frame length " + std::to_string(n) +
                                " is not a power of two");
  }
  fftw_plan plan = plan_cache().get(n);
  std::unique_ptr<double, FftwRealDeleter> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, FftwComplexDeleter> out(fftw_alloc_complex(n / 2 + 1));
  std::copy(frame.begin(), frame.end(), in.get());
  fftw_execute_dft_r2c(plan, in.get(), out.get());

  std::vector<double> spectrum(n / 2 + 1);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const double re = out.get()[k][0];
    const double im = out.get()[k][1];
    spectrum[k] = (re * re + im * im) * inv_n;
  }
  return spectrum;
}

double spectrum_mean_power(std::span<const double> spectrum) {
  if (spectrum.size() < 2) return spectrum.empty() ? 0.0 : spectrum[0];
  const std::size_t n = 2 * (spectrum.size() - 1);
  double total = spectrum.front() + spectrum.back();
  for (std::size_t k = 1; k + 1 < spectrum.size(); ++k) total += 2.0 * spectrum[k];
  return total / static_cast<double>(n);
}

double mel(double hz) {
  if (hz < 0.0) throw std::invalid_argument("mel: negative frequency");
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double mel_inverse(double mel_value) {
  return 700.0 * (std::pow(10.0, mel_value / 2595.0) - 1.0);
}

std::vector<double> FilterBank::center_frequencies() const {
  if (edges_hz.size() < 2) return {};
  return {edges_hz.begin() + 1, edges_hz.end() - 1};
}

std::size_t FilterBank::empty_filters() const {
  std::size_t count = 0;
  for (std::size_t r = 0; r < n_filters; ++r) {
    if (first_bin[r] >= end_bin[r]) ++count;
  }
  return count;
}

std::vector<double> FilterBank::apply(std::span<const double> spectrum) const {
  if (spectrum.size() != weights.cols()) {
    throw std::invalid_argument("FilterBank::apply: spectrum has " +
                                std::to_string(spectrum.size()) + " bins, expected " +
                                std::to_string(weights.cols()));
  }
  std::vector<double> energies(n_filters, 0.0);
  for (std::size_t r = 0; r < n_filters; ++r) {
    double e = 0.0;
    for (std::size_t k = first_bin[r]; k < end_bin[r]; ++k) e += weights(r, k) * spectrum[k];
    energies[r] = e;
  }
  return energies;
}

FilterBank build_filterbank(FilterKind kind, std::size_t n_filters, std::size_t frame_length,
                            double sample_rate, bool strict) {
  if (n_filters == 0) throw std::invalid_argument("build_filterbank: need at least one filter");
  if (!is_power_of_two(frame_length) || frame_length < 2) {
    throw std::invalid_argument("build_filterbank: frame length must be a power of two");
  }
  if (!(sample_rate > 0.0)) throw std::invalid_argument("build_filterbank: bad sample rate");

  FilterBank bank;
  bank.kind = kind;
  bank.n_filters = n_filters;
  bank.frame_length = frame_length;
  bank.sample_rate = sample_rate;

  const double nyquist = sample_rate / 2.0;
  const std::size_t n_bins = frame_length / 2 + 1;
  const double bin_hz = sample_rate / static_cast<double>(frame_length);

  // Edge positions on the warped axis (mel or Hz) where triangles are linear.
  auto warp = [kind](double hz) { return kind == FilterKind::kMel ? mel(hz) : hz; };
  const double lo = warp(0.0);
  const double hi = warp(nyquist);
  std::vector<double> warped_edges(n_filters + 2);
  for (std::size_t i = 0; i < warped_edges.size(); ++i) {
    warped_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_filters + 1);
  }
  bank.edges_hz.resize(warped_edges.size());
  for (std::size_t i = 0; i < warped_edges.size(); ++i) {
    bank.edges_hz[i] = kind == FilterKind::kMel ? mel_inverse(warped_edges[i]) : warped_edges[i];
  }
  bank.edges_hz.front() = 0.0;
  bank.edges_hz.back() = nyquist;

  bank.weights = Matrix(n_filters, n_bins);
  bank.first_bin.assign(n_filters, 0);
  bank.end_bin.assign(n_filters, 0);
  for (std::size_t r = 0; r < n_filters; ++r) {
    const double left = warped_edges[r];
    const double center = warped_edges[r + 1];
    const double right = warped_edges[r + 2];
    std::size_t first = n_bins;
    std::size_t last = 0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = warp(static_cast<double>(k) * bin_hz);
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      if (w > 0.0) {
        bank.weights(r, k) = w;
        first = std::min(first, k);
        last = std::max(last, k);
      }
    }
    if (first <= last) {
      bank.first_bin[r] = first;
      bank.end_bin[r] = last + 1;
    }
  }

  if (strict && bank.empty_filters() > 0) {
    throw std::invalid_argument("build_filterbank: " + std::to_string(bank.empty_filters()) +
                                " of " + std::to_string(n_filters) +
                                " filters cover no FFT bin at frame length " +
                                std::to_string(frame_length));
  }
  return bank;
}

std::vector<double> dct_ii(std::span<const double> input, std::size_t n_keep) {
  const std::size_t n = input.size();
  if (n_keep > n) {
    throw std::invalid_argument("dct_ii: cannot keep " + std::to_string(n_keep) +
                                " coefficients of a length-" + std::to_string(n) + " input");
  }
  std::vector<double> out(n_keep, 0.0);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < n_keep; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      s += input[i] * std::cos(std::numbers::pi * static_cast<double>(k) *
                               (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd));
    }
    out[k] = s * std::sqrt((k == 0 ? 1.0 : 2.0) / nd);
  }
  return out;
}

std::vector<double> dct_ii_inverse(std::span<const double> coefficients) {
  const std::size_t n = coefficients.size();
  const double nd = static_cast<double>(n);
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      s += coefficients[k] * std::sqrt((k == 0 ? 1.0 : 2.0) / nd) *
           std::cos(std::numbers::pi * static_cast<double>(k) *
                    (2.0 * static_cast<double>(i) + 1.0) / (2.0 * nd));
    }
    out[i] = s;
  }
  return out;
}

}  // namespace coughscreen::dsp
