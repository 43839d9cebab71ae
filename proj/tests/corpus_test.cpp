#include <gtest/gtest.h>

#include "coughscreen/corpus.hpp"
#include "coughscreen/wav.hpp"
#include "support.hpp"

using namespace coughscreen;
using namespace coughscreen::corpus;
namespace ts = testing_support;

namespace {

AnnotationSpan span(double a, double b, const std::string& label = "c",
                    const std::string& rec = "r1") {
  return {rec, a, b, label};
}

}  // namespace

TEST(Manifest, ParsesAndMergesRows) {
  ts::TempDir dir("manifest");
  ts::write_file(dir / "m.csv",
                 "patient_id,tb_label,recording_path,age,sex\n"
                 "A,1,a1.wav,34,M\n"
                 "B,0,b1.wav,,\n"
                 "A,1,a2.wav,34,M\n");
  const auto m = parse_manifest(dir / "m.csv");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].patient_id, "A");
  EXPECT_TRUE(m[0].tb);
  EXPECT_EQ(m[0].recording_paths.size(), 2u);
  EXPECT_EQ(m[0].age, 34);
  EXPECT_EQ(m[0].sex, Sex::kMale);
  EXPECT_FALSE(m[1].age.has_value());
  EXPECT_FALSE(m[1].sex.has_value());
}

TEST(Manifest, Errors) {
  ts::TempDir dir("manifest_err");
  ts::write_file(dir / "bad_label.csv", "patient_id,tb_label,recording_path,age,sex\nA,2,a.wav,,\n");
  EXPECT_THROW(parse_manifest(dir / "bad_label.csv"), DataError);
  ts::write_file(dir / "conflict.csv",
                 "patient_id,tb_label,recording_path,age,sex\nA,1,a.wav,,\nA,0,b.wav,,\n");
  EXPECT_THROW(parse_manifest(dir / "conflict.csv"), DataError);
  ts::write_file(dir / "header.csv", "id,label\n");
  EXPECT_THROW(parse_manifest(dir / "header.csv"), DataError);
  EXPECT_THROW(parse_manifest(dir / "missing.csv"), DataError);
}

TEST(Annotations, ParseSkipsCommentsAndGroupsCoughs) {
  ts::TempDir dir("ann");
  ts::write_file(dir / "a.tsv",
                 "# comment\n"
                 "r2\t1.5\t2.0\tc\n"
                 "r1\t3.0\t3.5\tc\n"
                 "\n"
                 "r1\t0.5\t1.0\tc\n"
                 "r1\t1.2\t1.4\tb\n");
  const auto a = parse_annotations(dir / "a.tsv");
  EXPECT_EQ(a.spans.size(), 4u);
  const auto c = a.coughs();
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].recording_id, "r2");
  EXPECT_EQ(c[1].start_s, 0.5);
  EXPECT_EQ(c[2].start_s, 3.0);
  ts::write_file(dir / "bad.tsv", "r1\t2.0\t1.0\tc\n");
  EXPECT_THROW(parse_annotations(dir / "bad.tsv"), DataError);
}

TEST(Wav, SixteenBitRoundTrip) {
  ts::TempDir dir("wav");
  const auto x = ts::uniform_noise(1000, 0.9, 3);
  write_wav16(dir / "x.wav", x, 44100);
  const auto w = read_wav(dir / "x.wav");
  EXPECT_EQ(w.sample_rate, 44100);
  EXPECT_EQ(w.bits_per_sample, 16);
  ASSERT_EQ(w.samples.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(w.samples[i], x[i], 1.0 / 32768.0);
}

TEST(Wav, RejectsNonPcm) {
  ts::TempDir dir("wav_bad");
  ts::write_file(dir / "x.wav", "not a wave file at all");
  EXPECT_THROW(read_wav(dir / "x.wav"), DataError);
  // IEEE float format tag 3.
  std::string h = "RIFF";
  auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) h.push_back(static_cast<char>(v >> (8 * i))); };
  auto u16 = [&](std::uint16_t v) { for (int i = 0; i < 2; ++i) h.push_back(static_cast<char>(v >> (8 * i))); };
  u32(36 + 8);
  h += "WAVEfmt ";
  u32(16);
  u16(3);
  u16(1);
  u32(44100);
  u32(44100 * 4);
  u16(4);
  u16(32);
  h += "data";
  u32(8);
  h += std::string(8, '\0');
  ts::write_file(dir / "f.wav", h);
  try {
    read_wav(dir / "f.wav");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported"), std::string::npos);
  }
}

class Recording : public ::testing::Test {
 protected:
  void SetUp() override {
    ts::write_file(dir_ / "m.csv", "patient_id,tb_label,recording_path,age,sex\nP1,1,r1.wav,40,F\n");
    write_wav16(dir_ / "r1.wav", ts::uniform_noise(44100 * 4, 0.3, 1), 44100);
  }
  ts::TempDir dir_{"rec"};
};

TEST_F(Recording, OneSecondSpanHas44100Samples) {
  ts::write_file(dir_ / "a.tsv", "r1\t0.5\t1.5\tc\nr1\t2.0\t2.25\tc\nr1\t3.0\t3.5\tc\nr1\t1.6\t1.9\ts\n");
  const auto c = load_corpus(dir_ / "m.csv", dir_ / "a.tsv", {}, 44100);
  ASSERT_EQ(c.segments.size(), 3u);
  EXPECT_NEAR(static_cast<double>(c.segments[0].samples.size()), 44100.0, 1.0);
  std::size_t total = 0;
  double spans = 0.0;
  for (const auto& s : c.segments) {
    total += s.samples.size();
    spans += s.duration();
    EXPECT_EQ(s.patient_id, "P1");
  }
  EXPECT_NEAR(static_cast<double>(total), spans * 44100.0, 3.0);
  EXPECT_EQ(c.segments[2].cough_id, "r1:2");
  EXPECT_EQ(c.snr.size(), 3u);
}

TEST_F(Recording, SpanPastTheEndFails) {
  ts::write_file(dir_ / "a.tsv", "r1\t3.5\t4.5\tc\n");
  EXPECT_THROW(load_corpus(dir_ / "m.csv", dir_ / "a.tsv", {}, 44100), DataError);
}

TEST_F(Recording, SampleRateMismatchFails) {
  ts::write_file(dir_ / "a.tsv", "r1\t0.5\t1.5\tc\n");
  EXPECT_THROW(load_corpus(dir_ / "m.csv", dir_ / "a.tsv", {}, 16000), DataError);
}

TEST(Snr, LogIdentities) {
  // 1 s cough at amplitude 10, 1 s background at amplitude 1 (square waves).
  std::vector<double> x(2000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = (i % 2 ? 1.0 : -1.0) * (i < 1000 ? 10.0 : 1.0);
  const std::vector<AnnotationSpan> spans{span(0.0, 1.0)};
  EXPECT_NEAR(estimate_snr(x, 1000.0, spans).db, 20.0, 1e-9);
  for (double& v : x) v = v > 0 ? 1.0 : -1.0;
  EXPECT_NEAR(estimate_snr(x, 1000.0, spans).db, 0.0, 1e-9);
}

TEST(Snr, ToneBurstOverUniformNoise) {
  // Signal spans hold tone plus noise: Ps = 0.5^2/2 + 0.05^2/3, Pn = 0.05^2/3.
  const double rate = 44100.0;
  auto x = ts::uniform_noise(static_cast<std::size_t>(3 * rate), 0.05, 17);
  const auto tone = ts::sine(441.0, rate, static_cast<std::size_t>(rate), 0.5);
  for (std::size_t i = 0; i < tone.size(); ++i) x[static_cast<std::size_t>(rate) + i] += tone[i];
  const double pn = 0.05 * 0.05 / 3.0;
  const double expected = 10.0 * std::log10((0.125 + pn) / pn);
  EXPECT_NEAR(expected, 21.79, 0.005);
  const std::vector<AnnotationSpan> spans{span(1.0, 2.0)};
  EXPECT_NEAR(estimate_snr(x, rate, spans).db, expected, 0.1);
}

TEST(Snr, ScaleInvariantAndExcludesBreathAndSpeech) {
  auto x = ts::gaussian_noise(40000, 0.01, 5);
  for (std::size_t i = 10000; i < 15000; ++i) x[i] *= 30.0;
  for (std::size_t i = 20000; i < 25000; ++i) x[i] *= 50.0;  // speech, must not count as noise
  const std::vector<AnnotationSpan> spans{span(1.0, 1.5), span(2.0, 2.5, "s")};
  const double a = estimate_snr(x, 10000.0, spans).db;
  for (double& v : x) v *= 123.0;
  EXPECT_NEAR(estimate_snr(x, 10000.0, spans).db, a, 1e-9);
  EXPECT_NEAR(a, 20.0 * std::log10(30.0), 0.5);
}

TEST(Snr, DegenerateAndEmptyCases) {
  std::vector<double> x(1000, 0.0);
  for (std::size_t i = 0; i < 500; ++i) x[i] = 0.5;
  const std::vector<AnnotationSpan> spans{span(0.0, 0.5)};
  const auto e = estimate_snr(x, 1000.0, spans);
  EXPECT_TRUE(e.degenerate);
  EXPECT_TRUE(std::isinf(e.db));
  const std::vector<AnnotationSpan> breath_only{span(0.0, 0.5, "b")};
  EXPECT_THROW(estimate_snr(x, 1000.0, breath_only), DataError);
  const std::vector<AnnotationSpan> everything{span(0.0, 1.0)};
  EXPECT_THROW(estimate_snr(x, 1000.0, everything), DataError);
}

TEST(Summary, MeanLength) {
  const std::vector<CoughInfo> c{{"A", true, 0.5, {10.0, false}}, {"A", true, 1.5, {20.0, false}}};
  const auto s = summarize(c);
  EXPECT_DOUBLE_EQ(s.tb.mean_length_s, 1.0);
  EXPECT_EQ(s.tb.patients, 1u);
  EXPECT_DOUBLE_EQ(s.tb.mean_coughs_per_patient, 2.0);
  EXPECT_NEAR(s.tb.snr_sd_db, std::sqrt(50.0), 1e-12);
  EXPECT_EQ(s.non_tb.coughs, 0u);
  EXPECT_THROW(summarize({}), DataError);
}

TEST(Summary, TotalEqualsCombinedClasses) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CoughInfo> c;
    const std::size_t n = 1 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      const bool tb = rng() % 2;
      const double db = std::uniform_real_distribution<double>(0.0, 40.0)(rng);
      const bool degenerate = rng() % 10 == 0;
      c.push_back({"P" + std::to_string(rng() % 8) + (tb ? "t" : "n"), tb,
                   std::uniform_real_distribution<double>(0.2, 1.5)(rng),
                   {degenerate ? std::numeric_limits<double>::infinity() : db, degenerate}});
    }
    const auto s = summarize(c);
    const auto m = combine(s.tb, s.non_tb);
    EXPECT_EQ(m.patients, s.total.patients);
    EXPECT_EQ(m.coughs, s.total.coughs);
    EXPECT_EQ(m.snr_count, s.total.snr_count);
    EXPECT_NEAR(m.total_length_s, s.total.total_length_s, 1e-9);
    EXPECT_NEAR(m.mean_length_s, s.total.mean_length_s, 1e-9);
    EXPECT_NEAR(m.mean_coughs_per_patient, s.total.mean_coughs_per_patient, 1e-12);
    EXPECT_NEAR(m.snr_mean_db, s.total.snr_mean_db, 1e-9);
    EXPECT_NEAR(m.snr_sd_db, s.total.snr_sd_db, 1e-9);
  }
}

TEST(Synthetic, DeterministicAndConsistentWithSummary) {
  ts::TempDir a("synth_a");
  ts::TempDir b("synth_b");
  auto cfg = SyntheticConfig::preset("easy");
  cfg.patients_per_class = 5;
  cfg.coughs_per_patient = 4;
  const auto ga = generate_synthetic(cfg, a.path());
  generate_synthetic(cfg, b.path());
  EXPECT_EQ(ts::slurp(ga.manifest), ts::slurp(b / "manifest.csv"));
  EXPECT_EQ(ts::slurp(ga.annotations), ts::slurp(b / "annotations.tsv"));
  for (const auto& e : std::filesystem::directory_iterator(ga.audio_dir)) {
    EXPECT_EQ(ts::slurp(e.path()), ts::slurp(b / "audio" / e.path().filename().string()));
  }

  const auto corpus = load_corpus(ga.manifest, ga.annotations, {}, cfg.sample_rate);
  const auto s = summarize(corpus.cough_infos());
  EXPECT_EQ(s.tb.patients, ga.patients[1]);
  EXPECT_EQ(s.non_tb.patients, ga.patients[0]);
  EXPECT_EQ(s.tb.coughs, ga.coughs[1]);
  EXPECT_EQ(s.non_tb.coughs, ga.coughs[0]);
  EXPECT_NEAR(s.tb.total_length_s, ga.total_length_s[1], 1e-6);
  EXPECT_NEAR(s.non_tb.total_length_s, ga.total_length_s[0], 1e-6);
  EXPECT_EQ(s.total.coughs, 40u);
  EXPECT_NEAR(s.total.snr_mean_db, cfg.snr_db, 3.0);
}

TEST(Synthetic, SeedChangesOutput) {
  ts::TempDir a("synth_s1");
  ts::TempDir b("synth_s2");
  auto cfg = SyntheticConfig::preset("null");
  cfg.patients_per_class = 2;
  cfg.coughs_per_patient = 2;
  generate_synthetic(cfg, a.path());
  cfg.seed += 1;
  generate_synthetic(cfg, b.path());
  EXPECT_NE(ts::slurp(a / "annotations.tsv"), ts::slurp(b / "annotations.tsv"));
}

TEST(Synthetic, PresetsAndValidation) {
  EXPECT_EQ(SyntheticConfig::preset("null").separability, 0.0);
  EXPECT_THROW(SyntheticConfig::preset("bogus"), ConfigError);
  auto cfg = SyntheticConfig::preset("easy");
  cfg.patients_per_class = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
