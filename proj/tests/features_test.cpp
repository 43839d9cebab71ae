#include <gtest/gtest.h>

#include <set>

#include "coughscreen/features.hpp"
#include "support.hpp"

using namespace coughscreen;
using namespace coughscreen::features;
namespace ts = testing_support;

namespace {

FeatureConfig mfcc_config(std::size_t m = 13, std::size_t frame = 2048, std::size_t sections = 1) {
  FeatureConfig c;
  c.n_mfcc = m;
  c.frame_length = frame;
  c.sections = sections;
  return c;
}

std::vector<double> column_means(const Matrix& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c);
  }
  for (double& v : out) v /= static_cast<double>(m.rows());
  return out;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace

TEST(FeatureConfig, DimensionFormulaOverPublishedGrid) {
  const auto grid = paper_grid();
  EXPECT_EQ(grid.size(), 240u);
  std::set<std::tuple<int, std::size_t, std::size_t, std::size_t>> distinct;
  for (const auto& c : grid) {
    EXPECT_NO_THROW(c.validate());
    const std::size_t k = c.kind == FeatureKind::kMfcc ? c.n_mfcc : c.n_filters;
    EXPECT_EQ(c.dimension(), c.sections * (3 * k + 2));
    distinct.insert({static_cast<int>(c.kind), k, c.frame_length, c.sections});
  }
  EXPECT_EQ(distinct.size(), grid.size());
}

TEST(FeatureConfig, KnownDimensions) {
  EXPECT_EQ(mfcc_config(13, 2048, 4).dimension(), 164u);
  EXPECT_EQ(mfcc_config(26, 2048, 1).dimension(), 80u);
  auto no_deltas = mfcc_config(13, 2048, 2);
  no_deltas.include_deltas = false;
  EXPECT_EQ(no_deltas.dimension(), 2u * (13 + 2));
}

TEST(FeatureConfig, PaperModeRanges) {
  auto c = mfcc_config(14);
  EXPECT_NO_THROW(c.validate());
  c.paper_mode = true;
  EXPECT_THROW(c.validate(), ConfigError);
  c = mfcc_config(13, 8192);
  c.paper_mode = true;
  EXPECT_THROW(c.validate(), ConfigError);
  c = mfcc_config(13, 2048, 5);
  c.paper_mode = true;
  EXPECT_THROW(c.validate(), ConfigError);
  c = mfcc_config(13, 1000);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(FeatureConfig, MelBankIsAtLeastTwentySix) {
  EXPECT_EQ(mfcc_config(13).mel_bank_size(), 26u);
  EXPECT_EQ(mfcc_config(39).mel_bank_size(), 39u);
}

TEST(Deltas, ConstantSequenceIsZero) {
  Matrix m(7, 3, 2.5);
  const auto [d, dd] = deltas(m, 2);
  for (double v : d.data()) EXPECT_EQ(v, 0.0);
  for (double v : dd.data()) EXPECT_EQ(v, 0.0);
}

TEST(Deltas, RampInteriorIsOne) {
  Matrix m(9, 1);
  for (std::size_t t = 0; t < 9; ++t) m(t, 0) = static_cast<double>(t);
  const auto [d, dd] = deltas(m, 2);
  for (std::size_t t = 2; t + 2 < 9; ++t) EXPECT_DOUBLE_EQ(d(t, 0), 1.0);
}

TEST(Deltas, SingleFrameIsZero) {
  Matrix m(1, 4, 1.7);
  const auto [d, dd] = deltas(m, 2);
  for (double v : d.data()) EXPECT_EQ(v, 0.0);
}

TEST(Deltas, TimeReversalNegates) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + rng() % 20;
    Matrix m(n, 3);
    for (double& v : m.data()) v = g(rng);
    Matrix r(n, 3);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t c = 0; c < 3; ++c) r(t, c) = m(n - 1 - t, c);
    }
    const auto dm = deltas(m, 2).first;
    const auto dr = deltas(r, 2).first;
    for (std::size_t t = 2; t + 2 < n; ++t) {
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(dr(t, c), -dm(n - 1 - t, c), 1e-12);
    }
  }
}

TEST(Zcr, Extremes) {
  EXPECT_EQ(zcr(std::vector<double>(100, 0.3)), 0.0);
  std::vector<double> alt(100);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 == 0 ? 1.0 : -1.0;
  EXPECT_EQ(zcr(alt), 1.0);
  EXPECT_EQ(zcr(std::vector<double>{0.0, 1.0, 0.0, -1.0}), 0.0);
  EXPECT_THROW(zcr(std::vector<double>{1.0}), DataError);
}

TEST(Zcr, KiloHertzSine) {
  // 2 crossings per period over 2048 samples at 44.1 kHz.
  const double expected = 2.0 * 1000.0 * (2048.0 / 44100.0) / 2047.0;
  EXPECT_NEAR(zcr(ts::sine(1000.0, 44100.0, 2048, 0.8)), expected, 1e-3);
  EXPECT_NEAR(expected, 0.0454, 1e-4);
}

TEST(Kurtosis, UniformAndGaussian) {
  EXPECT_NEAR(kurtosis(ts::uniform_noise(100000, 1.0, 1)), 1.8, 0.1);
  EXPECT_NEAR(kurtosis(ts::gaussian_noise(100000, 1.0, 2)), 3.0, 0.15);
  EXPECT_THROW(kurtosis(std::vector<double>(50, 1.0)), DegenerateFrameError);
}

TEST(TimeDomainStats, ScaleInvariant) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    auto x = ts::gaussian_noise(64 + rng() % 500, 1.0, rng());
    const double k = std::exp(std::uniform_real_distribution<double>(-5.0, 5.0)(rng));
    auto y = x;
    for (double& v : y) v *= k;
    EXPECT_NEAR(zcr(y), zcr(x), 1e-9);
    EXPECT_NEAR(kurtosis(y), kurtosis(x), 1e-9);
  }
}

TEST(MfccFrames, ShapeOfPointSevenFourSecondCough) {
  const auto seg = ts::segment(ts::gaussian_noise(32634, 0.1, 3));
  const Matrix m = mfcc_frames(seg, mfcc_config());
  EXPECT_EQ(m.rows(), 15u);
  EXPECT_EQ(m.cols(), 13u);
}

TEST(MfccFrames, MeanRemoved) {
  for (std::size_t m : {13u, 26u, 39u}) {
    const auto seg = ts::segment(ts::uniform_noise(20000, 0.5, m));
    for (double v : column_means(mfcc_frames(seg, mfcc_config(m, 1024)))) EXPECT_NEAR(v, 0.0, 1e-9);
  }
}

TEST(MfccFrames, TonesAreDistinct) {
  const auto cfg = mfcc_config();
  const auto bank = cfg.make_filterbank();
  const auto low = column_means(cepstral_frames(ts::sine(1000.0, 44100.0, 20480, 0.5), cfg, bank));
  const auto high = column_means(cepstral_frames(ts::sine(4000.0, 44100.0, 20480, 0.5), cfg, bank));
  EXPECT_GT(distance(low, high), 0.1);
}

TEST(LogFilterbank, SixtyFilters) {
  FeatureConfig c;
  c.kind = FeatureKind::kLogFilterbank;
  c.n_filters = 60;
  const auto m = log_filterbank_frames(ts::segment(ts::gaussian_noise(8192, 0.1, 1)), c);
  EXPECT_EQ(m.cols(), 60u);
  EXPECT_EQ(m.rows(), 4u);
}

TEST(LogFilterbank, SilenceSitsAtFloor) {
  FeatureConfig c;
  c.kind = FeatureKind::kLogFilterbank;
  const auto m = log_filterbank_frames(ts::segment(std::vector<double>(4096, 0.0)), c);
  for (double v : m.data()) EXPECT_DOUBLE_EQ(v, std::log(1e-10));
}

TEST(LogFilterbank, DoublingAmplitudeAddsLogFour) {
  FeatureConfig c;
  c.kind = FeatureKind::kLogFilterbank;
  auto x = ts::gaussian_noise(8192, 0.1, 9);
  auto y = x;
  for (double& v : y) v *= 2.0;
  const auto a = log_filterbank_frames(ts::segment(x), c);
  const auto b = log_filterbank_frames(ts::segment(y), c);
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    EXPECT_NEAR(b.data()[i] - a.data()[i], std::log(4.0), 1e-9);
  }
}

TEST(Assemble, DimensionsAndUniqueNames) {
  const auto seg = ts::segment(ts::gaussian_noise(30000, 0.1, 5));
  for (auto cfg : {mfcc_config(13, 2048, 4), mfcc_config(26, 1024, 1), mfcc_config(39, 256, 3)}) {
    const auto v = assemble(seg, cfg);
    EXPECT_EQ(v.values.size(), cfg.dimension());
    EXPECT_EQ(v.names.size(), cfg.dimension());
    EXPECT_EQ(std::set<std::string>(v.names.begin(), v.names.end()).size(), v.names.size());
  }
  FeatureConfig fb;
  fb.kind = FeatureKind::kLogFilterbank;
  fb.n_filters = 80;
  fb.sections = 2;
  EXPECT_EQ(assemble(seg, fb).values.size(), 2u * (3 * 80 + 2));
}

TEST(Assemble, OneSectionIsTheFrameMean) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const auto seg = ts::segment(ts::gaussian_noise(5000 + rng() % 30000, 0.2, rng()));
    const auto cfg = mfcc_config(13, 1024, 1);
    const Matrix rows = frame_feature_matrix(seg, mfcc_frames(seg, cfg), cfg, nullptr);
    const auto expected = column_means(rows);
    const auto v = assemble(seg, cfg);
    ASSERT_EQ(v.values.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(v.values[i], expected[i], 1e-12);
  }
}

TEST(Assemble, SectionsSeparateToneFromNoise) {
  const auto tone = ts::sine(1000.0, 44100.0, 16384, 0.5);
  auto x = ts::gaussian_noise(32768, 0.001, 4);
  std::copy(tone.begin(), tone.end(), x.begin());
  const auto cfg = mfcc_config(13, 2048, 2);
  const auto v = assemble(ts::segment(x), cfg);
  const std::size_t w = cfg.frame_dim();
  const std::span<const double> all(v.values);
  EXPECT_GT(distance(all.subspan(0, w), all.subspan(w, w)), 0.1);
}

TEST(Assemble, RemainderGoesToEarlySections) {
  Matrix rows(5, 1);
  for (std::size_t t = 0; t < 5; ++t) rows(t, 0) = static_cast<double>(t);
  const auto v = section_average(rows, 2);
  EXPECT_DOUBLE_EQ(v[0], 1.0);  // frames 0..2
  EXPECT_DOUBLE_EQ(v[1], 3.5);  // frames 3..4
}

TEST(Assemble, ShortSegmentIsPaddedWithWarning) {
  const auto seg = ts::segment(ts::gaussian_noise(3000, 0.1, 8));
  const auto v = assemble(seg, mfcc_config(13, 2048, 4));
  EXPECT_EQ(v.values.size(), 164u);
  EXPECT_EQ(v.n_frames, 4u);
  EXPECT_FALSE(v.warnings.empty());
  for (double x : v.values) EXPECT_TRUE(std::isfinite(x));
}

TEST(Assemble, ConstantFramesWarnAndStayFinite) {
  const auto v = assemble(ts::segment(std::vector<double>(8192, 0.25)), mfcc_config(13, 2048));
  EXPECT_FALSE(v.warnings.empty());
  for (double x : v.values) EXPECT_TRUE(std::isfinite(x));
}

TEST(Cmn, SingleCoughRecordingHasZeroMean) {
  std::vector<Matrix> cep{cepstral_frames(ts::gaussian_noise(20000, 0.1, 1), mfcc_config(),
                                          mfcc_config().make_filterbank())};
  const std::vector<std::string> ids{"r1"};
  cepstral_mean_normalize(cep, ids);
  for (double v : column_means(cep[0])) EXPECT_NEAR(v, 0.0, 1e-9);
}

TEST(Cmn, ConstantOffsetIsRemoved) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<Matrix> a{Matrix(4, 13), Matrix(6, 13)};
  for (auto& m : a) {
    for (double& v : m.data()) v = g(rng);
  }
  auto b = a;
  for (auto& m : b) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < 13; ++c) m(r, c) += 0.3 * static_cast<double>(c) - 2.0;
    }
  }
  const std::vector<std::string> ids{"r", "r"};
  cepstral_mean_normalize(a, ids);
  cepstral_mean_normalize(b, ids);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < a[i].data().size(); ++j) {
      EXPECT_NEAR(a[i].data()[j], b[i].data()[j], 1e-12);
    }
  }
}

TEST(Cmn, ChannelGainDoesNotChangeFeatures) {
  // A constant gain adds a constant to every log energy, i.e. a constant
  // cepstral offset; zcr and kurtosis are scale invariant.
  std::vector<corpus::CoughSegment> segs;
  for (int k = 0; k < 3; ++k) {
    auto x = ts::gaussian_noise(10000 + 3000 * k, 0.05, 40 + k);
    auto y = x;
    for (double& v : y) v *= 7.0;
    segs.push_back(ts::segment(x, "rA", "PA", k));
    segs.push_back(ts::segment(y, "rB", "PB", k));
  }
  const auto out = extract(segs, mfcc_config(13, 1024, 2));
  for (std::size_t i = 0; i < segs.size(); i += 2) {
    const auto& a = out[i].vector.values;
    const auto& b = out[i + 1].vector.values;
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-6) << out[i].vector.names[j];
  }
}

TEST(Extract, MatchesAssembleForSingleCoughRecordings) {
  std::vector<corpus::CoughSegment> segs;
  for (int k = 0; k < 4; ++k) {
    segs.push_back(ts::segment(ts::gaussian_noise(9000 + 1000 * k, 0.1, k), "r" + std::to_string(k)));
  }
  const auto cfg = mfcc_config(13, 512, 3);
  const auto out = extract(segs, cfg, true);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto ref = assemble(segs[i], cfg);
    ASSERT_EQ(out[i].vector.values.size(), ref.values.size());
    for (std::size_t j = 0; j < ref.values.size(); ++j) {
      EXPECT_NEAR(out[i].vector.values[j], ref.values[j], 1e-12);
    }
    EXPECT_EQ(out[i].frames.cols(), cfg.frame_dim());
    EXPECT_EQ(out[i].frames.rows(), out[i].vector.n_frames);
  }
}

TEST(Extract, EmptyCoughNamesItself) {
  std::vector<corpus::CoughSegment> segs{ts::segment(ts::gaussian_noise(4000, 0.1, 1)),
                                         ts::segment({}, "r9", "P9", 3)};
  try {
    extract(segs, mfcc_config());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("r9:3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("P9"), std::string::npos);
  }
}
