#include <gtest/gtest.h>

#include <complex>
#include <numeric>

#include "coughscreen/dsp.hpp"
#include "support.hpp"

using namespace coughscreen;
using namespace coughscreen::dsp;
namespace ts = testing_support;

namespace {

// O(N^2) one-sided periodogram used as the reference for the FFT path.
std::vector<double> naive_power(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = std::norm(acc) / static_cast<double>(n);
  }
  return out;
}

double mean_square(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

}  // namespace

TEST(FrameSignal, TenSamplesFrameFour) {
  std::vector<double> x(10);
  std::iota(x.begin(), x.end(), 0.0);
  const auto frames = frame_signal(x, 4, 4);
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0].start_index, 0u);
  EXPECT_EQ(frames[1].start_index, 4u);
  EXPECT_EQ(frames[1].samples, (std::vector<double>{4, 5, 6, 7}));
}

TEST(FrameSignal, ShortSignalIsZeroPadded) {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const auto frames = frame_signal(x, 4, 4);
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].samples, (std::vector<double>{1, 2, 3, 0}));
}

TEST(FrameSignal, CoughOfPointSevenFourSeconds) {
  const std::vector<double> x(32634, 0.1);
  EXPECT_EQ(frame_signal(x, 2048, 2048).size(), 15u);
}

TEST(FrameSignal, FramesTileThePrefix) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t len = 1 + rng() % 500;
    const std::size_t f = 1 + rng() % 64;
    const auto x = ts::uniform_noise(len, 1.0, rng());
    const auto frames = frame_signal(x, f, f);
    std::vector<double> joined;
    for (const auto& fr : frames) joined.insert(joined.end(), fr.samples.begin(), fr.samples.end());
    if (len >= f) {
      ASSERT_EQ(joined.size(), (len / f) * f);
      EXPECT_TRUE(std::equal(joined.begin(), joined.end(), x.begin()));
    } else {
      EXPECT_TRUE(std::equal(x.begin(), x.end(), joined.begin()));
    }
  }
}

TEST(FrameSignal, ZeroLengthRejected) {
  const std::vector<double> x(8, 0.0);
  EXPECT_THROW(frame_signal(x, 0, 1), std::invalid_argument);
}

TEST(PowerSpectrum, ZeroFrame) {
  const auto s = power_spectrum(std::vector<double>(16, 0.0));
  ASSERT_EQ(s.size(), 9u);
  for (double v : s) EXPECT_EQ(v, 0.0);
}

TEST(PowerSpectrum, ImpulseIsFlat) {
  std::vector<double> x(8, 0.0);
  x[0] = 1.0;
  for (double v : power_spectrum(x)) EXPECT_NEAR(v, 1.0 / 8.0, 1e-15);
}

TEST(PowerSpectrum, AlignedSineHasNoLeakage) {
  const std::size_t n = 64;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = std::sin(2.0 * std::numbers::pi * 4.0 * t / n);
  const auto s = power_spectrum(x);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k == 4) {
      EXPECT_NEAR(s[k], static_cast<double>(n) / 4.0, 1e-9);
    } else {
      EXPECT_LE(s[k], 1e-10) << "bin " << k;
    }
  }
}

TEST(PowerSpectrum, MatchesNaiveDft) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {2u, 8u, 64u, 256u}) {
    const auto x = ts::gaussian_noise(n, 1.0, rng());
    const auto fast = power_spectrum(x);
    const auto slow = naive_power(x);
    for (std::size_t k = 0; k < fast.size(); ++k) EXPECT_NEAR(fast[k], slow[k], 1e-9);
  }
}

TEST(PowerSpectrum, ParsevalOnRandomFrames) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = std::size_t{1} << (1 + rng() % 12);
    const auto x = ts::uniform_noise(n, 2.0, rng());
    EXPECT_NEAR(spectrum_mean_power(power_spectrum(x)), mean_square(x), 1e-9);
  }
}

TEST(PowerSpectrum, NonPowerOfTwoRejected) {
  EXPECT_THROW(power_spectrum(std::vector<double>(100, 1.0)), std::invalid_argument);
}

TEST(Mel, KnownValues) {
  EXPECT_EQ(mel(0.0), 0.0);
  EXPECT_NEAR(mel(700.0), 2595.0 * std::log10(2.0), 1e-9);
  EXPECT_NEAR(mel(700.0), 781.17, 0.01);
  EXPECT_THROW(mel(-1.0), std::invalid_argument);
}

TEST(Mel, RoundTripAndMonotone) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(1e-3, 22050.0);
  double prev_f = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double f = u(rng);
    EXPECT_NEAR(mel_inverse(mel(f)), f, 1e-6 * f);
    if (f > prev_f) EXPECT_GT(mel(f), mel(prev_f));
    prev_f = f;
  }
}

TEST(FilterBank, LinearFortyFiltersAllNonEmpty) {
  const auto bank = build_filterbank(FilterKind::kLinear, 40, 2048, 44100.0);
  EXPECT_EQ(bank.weights.rows(), 40u);
  EXPECT_EQ(bank.empty_filters(), 0u);
}

TEST(FilterBank, MelCentresSpreadApart) {
  const auto bank = build_filterbank(FilterKind::kMel, 26, 2048, 44100.0);
  const auto c = bank.center_frequencies();
  ASSERT_EQ(c.size(), 26u);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_GT(c[i], c[i - 1]);
  for (std::size_t i = 2; i < c.size(); ++i) EXPECT_GT(c[i] - c[i - 1], c[i - 1] - c[i - 2]);
}

// Each weight recomputed from the triangle definition on the warped axis.
TEST(FilterBank, WeightsMatchClosedFormTriangles) {
  for (auto kind : {FilterKind::kMel, FilterKind::kLinear}) {
    for (std::size_t n_filters : {10u, 26u, 40u}) {
      const std::size_t n = 1024;
      const double sr = 44100.0;
      const auto bank = build_filterbank(kind, n_filters, n, sr);
      auto warp = [&](double hz) { return kind == FilterKind::kMel ? 2595.0 * std::log10(1.0 + hz / 700.0) : hz; };
      const double top = warp(sr / 2.0);
      const std::vector<double> ones(n / 2 + 1, 1.0);
      const auto sums = bank.apply(ones);
      for (std::size_t r = 0; r < n_filters; ++r) {
        const double lo = top * r / (n_filters + 1.0);
        const double mid = top * (r + 1.0) / (n_filters + 1.0);
        const double hi = top * (r + 2.0) / (n_filters + 1.0);
        double expected = 0.0;
        double peak = 0.0;
        for (std::size_t k = 0; k <= n / 2; ++k) {
          const double f = warp(k * sr / n);
          const double w = std::max(0.0, std::min((f - lo) / (mid - lo), (hi - f) / (hi - mid)));
          EXPECT_NEAR(bank.weights(r, k), w, 1e-9);
          expected += w;
          peak = std::max(peak, bank.weights(r, k));
        }
        EXPECT_NEAR(sums[r], expected, 1e-9);
        EXPECT_GT(sums[r], 0.0);
        EXPECT_LE(peak, 1.0);
      }
    }
  }
}

TEST(FilterBank, NothingOutsideTheBand) {
  const auto bank = build_filterbank(FilterKind::kMel, 26, 512, 44100.0);
  const double bin_hz = 44100.0 / 512.0;
  for (std::size_t r = 0; r < bank.n_filters; ++r) {
    for (std::size_t k = 0; k < bank.weights.cols(); ++k) {
      const double f = k * bin_hz;
      if (f <= bank.edges_hz[r] || f >= bank.edges_hz[r + 2]) {
        EXPECT_EQ(bank.weights(r, k), 0.0);
      }
    }
  }
}

TEST(FilterBank, TooManyFiltersForResolution) {
  EXPECT_THROW(build_filterbank(FilterKind::kMel, 200, 256, 44100.0), std::invalid_argument);
  const auto lax = build_filterbank(FilterKind::kMel, 200, 256, 44100.0, false);
  EXPECT_GT(lax.empty_filters(), 0u);
}

TEST(Dct, ConstantInputOnlyDc) {
  const std::vector<double> x(12, 3.0);
  const auto c = dct_ii(x, 12);
  EXPECT_NEAR(c[0], 3.0 * std::sqrt(12.0), 1e-12);
  for (std::size_t k = 1; k < c.size(); ++k) EXPECT_NEAR(c[k], 0.0, 1e-12);
}

TEST(Dct, BasisVectorResponse) {
  const std::size_t n = 16;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(std::numbers::pi * 3.0 * (2.0 * i + 1.0) / (2.0 * n));
  const auto c = dct_ii(x, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k != 3) EXPECT_LT(std::abs(c[k]), 1e-9 * std::abs(c[3]));
  }
}

TEST(Dct, OrthonormalMatrix) {
  for (std::size_t n : {5u, 13u, 26u, 40u}) {
    Matrix d(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      const auto col = dct_ii(e, n);
      for (std::size_t k = 0; k < n; ++k) d(k, j) = col[k];
    }
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        EXPECT_NEAR(dot(d.row(a), d.row(b)), a == b ? 1.0 : 0.0, 1e-9);
      }
    }
  }
}

TEST(Dct, EnergyPreservedAndInvertible) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto x = ts::gaussian_noise(1 + rng() % 60, 1.0, rng());
    const auto c = dct_ii(x, x.size());
    EXPECT_NEAR(mean_square(c), mean_square(x), 1e-9);
    const auto back = dct_ii_inverse(c);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(back[i], x[i], 1e-9);
  }
}

TEST(Dct, TooManyCoefficients) {
  EXPECT_THROW(dct_ii(std::vector<double>(4, 1.0), 5), std::invalid_argument);
}
