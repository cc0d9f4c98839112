#include <catch_amalgamated.hpp>

#include "moodscreen/audio/fft.hpp"
#include "moodscreen/audio/resample.hpp"
#include "moodscreen/audio/vad.hpp"
#include "moodscreen/audio/wav.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace moodscreen;
using Catch::Approx;

namespace {

AudioBuffer tone_in_silence(std::vector<std::pair<double, double>> spans, double total_s, int rate = 16000) {
  AudioBuffer buf;
  buf.sample_rate = rate;
  buf.samples.assign(static_cast<std::size_t>(total_s * rate), 0.0);
  for (auto [a, b] : spans)
    for (auto i = static_cast<std::size_t>(a * rate); i < static_cast<std::size_t>(b * rate); ++i)
      buf.samples[i] = 0.5 * std::sin(2 * std::numbers::pi * 300.0 * static_cast<double>(i) / rate);
  return buf;
}

}  // namespace

TEST_CASE("wav round trip and decoding") {
  testutil::TempDir dir("wav");
  SECTION("16-bit mono keeps its length") {
    const auto tone = oracle::sine(440, 0.25, 16000);
    save_wav(dir.path / "t.wav", tone);
    const auto back = load_wav(dir.path / "t.wav");
    CHECK(back.size() == tone.size());
    CHECK(back.sample_rate == 16000);
    for (std::size_t i = 0; i < tone.size(); i += 97) CHECK(back.samples[i] == Approx(tone.samples[i]).margin(1.0 / 32767));
  }
  SECTION("identical stereo channels downmix to either channel") {
    std::vector<double> ch{0.0, 0.25, -0.5, 0.75};
    const auto mono = decode_wav(encode_wav16({ch, ch}, 8000));
    REQUIRE(mono.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(mono.samples[i] == Approx(ch[i]).margin(1.0 / 32767));
  }
  SECTION("full-scale positive sample maps to 1") {
    const auto b = decode_wav(encode_wav16({{1.0}}, 16000));
    CHECK(std::abs(b.samples[0] - 1.0) <= std::numeric_limits<double>::epsilon());
  }
  SECTION("garbage is a data error") {
    CHECK_THROWS_AS(decode_wav("not a wav file at all"), DataError);
    CHECK_THROWS_AS(load_wav(dir.path / "missing.wav"), Error);
  }
}

TEST_CASE("resampling") {
  SECTION("440 Hz stays at 440 Hz after 44.1 kHz to 16 kHz") {
    const auto out = resample(oracle::sine(440, 0.5, 44100), 16000);
    CHECK(out.sample_rate == 16000);
    CHECK(std::abs(oracle::dft_peak(out, 400, 480) - 440.0) <= 1.0);
  }
  SECTION("same rate is a bit-identical pass-through") {
    const auto in = oracle::sine(123, 0.1, 16000);
    CHECK(resample(in, 16000).samples == in.samples);
  }
  SECTION("length arithmetic") {
    AudioBuffer in;
    in.sample_rate = 48000;
    in.samples.assign(48000, 0.1);
    CHECK(resample(in, 16000).size() == 16000);
  }
  SECTION("round trip through 16 kHz keeps the tone") {
    const auto there = resample(oracle::sine(440, 0.5, 44100), 16000);
    const auto back = resample(there, 44100);
    CHECK(std::abs(oracle::dft_peak(back, 400, 480) - 440.0) <= 1.0);
  }
  SECTION("bad rates") { CHECK_THROWS_AS(resample(oracle::sine(1, 0.1, 8000), 0), ValidationError); }
}

TEST_CASE("fft agrees with a direct DFT") {
  std::vector<std::complex<double>> a(16);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = {std::sin(0.3 * static_cast<double>(i)), 0.1 * static_cast<double>(i)};
  auto b = a;
  fft(b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::complex<double> acc = 0;
    for (std::size_t n = 0; n < a.size(); ++n)
      acc += a[n] * std::polar(1.0, -2 * std::numbers::pi * static_cast<double>(k * n) / static_cast<double>(a.size()));
    CHECK(std::abs(acc - b[k]) < 1e-9);
  }
}

TEST_CASE("voice activity detection") {
  SECTION("silence has no segments") {
    AudioBuffer z;
    z.samples.assign(16000, 0.0);
    CHECK(vad_segments(z).empty());
  }
  SECTION("one tone in silence gives one segment around it") {
    const auto buf = tone_in_silence({{1.0, 2.0}}, 3.0);
    const auto segs = vad_segments(buf);
    REQUIRE(segs.size() == 1);
    const double frame = 0.025 * 16000;
    CHECK(std::abs(static_cast<double>(segs[0].start_sample) - 16000.0) <= frame);
    CHECK(std::abs(static_cast<double>(segs[0].end_sample) - 32000.0) <= frame);
  }
  SECTION("two tones a second apart stay separate") {
    const auto segs = vad_segments(tone_in_silence({{0.5, 1.0}, {2.0, 2.5}}, 3.0));
    CHECK(segs.size() == 2);
  }
  SECTION("segments are sorted, disjoint and long enough; scale invariant") {
    const auto buf = tone_in_silence({{0.2, 0.3}, {0.5, 1.2}, {1.3, 1.8}, {2.5, 2.9}}, 3.0);
    VadConfig cfg;
    const auto segs = vad_segments(buf, cfg);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      CHECK(segs[i].length() >= ms_to_samples(cfg.min_speech_ms, 16000));
      if (i) CHECK(segs[i].start_sample >= segs[i - 1].end_sample);
    }
    for (double c : {0.01, 0.3, 1.7}) {
      AudioBuffer scaled = buf;
      for (auto& s : scaled.samples) s *= c;
      CHECK(vad_segments(scaled, cfg) == segs);
    }
  }
  SECTION("invalid config") {
    VadConfig bad;
    bad.hop_ms = 0;
    CHECK_THROWS_AS(vad_segments(tone_in_silence({{0, 1}}, 1), bad), ConfigError);
  }
  SECTION("clipping to turn spans") {
    const std::vector<Segment> segs{{0, 100}, {200, 400}};
    const auto clipped = clip_to_spans(segs, {{50, 250}});
    REQUIRE(clipped.size() == 2);
    CHECK(clipped[0] == Segment{50, 100});
    CHECK(clipped[1] == Segment{200, 250});
  }
}
