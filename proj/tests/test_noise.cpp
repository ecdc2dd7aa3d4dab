#include <doctest.h>

#include <cmath>
#include <fstream>

#include "edrlmea/csv.hpp"
#include "edrlmea/noise.hpp"
#include "helpers.hpp"

using namespace edrlmea;

namespace {

constexpr double kPi = 3.14159265358979323846;

noise::Waveform sine(double amplitude, int cycles, int samples_per_cycle, int rate = 16000) {
  noise::Waveform w;
  w.sample_rate = rate;
  const int n = cycles * samples_per_cycle;
  w.samples.resize(n);
  for (int i = 0; i < n; ++i)
    w.samples[i] = amplitude * std::sin(2.0 * kPi * i / samples_per_cycle);
  return w;
}

noise::Waveform random_wave(std::size_t n, double amplitude, Rng& rng, int rate = 16000) {
  noise::Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (auto& s : w.samples) s = amplitude * (2.0 * rng.uniform01() - 1.0);
  return w;
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("rms basics") {
  noise::Waveform constant{std::vector<double>(100, 0.5), 16000};
  CHECK(noise::rms(constant) == doctest::Approx(0.5));

  noise::Waveform alternating{{1.0, -1.0, 1.0, -1.0}, 16000};
  CHECK(noise::rms(alternating) == doctest::Approx(1.0));

  // whole periods of a sinusoid: rms = A / sqrt(2)
  auto s = sine(0.4, 10, 64);
  CHECK(noise::rms(s) == doctest::Approx(0.4 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("wav round-trip stays within one quantization step") {
  auto dir = helpers::temp_dir("wav");
  Rng rng(301);
  auto w = random_wave(2000, 0.8, rng);
  auto stats = noise::write_wav(dir / "a.wav", w);
  CHECK(stats.clipped == 0);
  auto r = noise::read_wav(dir / "a.wav");
  CHECK(r.sample_rate == w.sample_rate);
  REQUIRE(r.samples.size() == w.samples.size());
  double max_err = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    max_err = std::max(max_err, std::abs(r.samples[i] - w.samples[i]));
  CHECK(max_err < std::pow(2.0, -15));
}

TEST_CASE("wav writer counts clipped samples") {
  auto dir = helpers::temp_dir("clip");
  noise::Waveform w{{0.5, 1.5, -2.0, 0.1}, 16000};
  auto stats = noise::write_wav(dir / "c.wav", w);
  CHECK(stats.clipped == 2);
}

TEST_CASE("stereo and malformed files are rejected") {
  auto dir = helpers::temp_dir("badwav");
  // hand-built stereo header with one frame
  std::ofstream out(dir / "stereo.wav", std::ios::binary);
  auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
  out.write("RIFF", 4);
  u32(40);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  u32(16);
  u16(1);      // pcm
  u16(2);      // stereo
  u32(16000);  // rate
  u32(64000);
  u16(4);
  u16(16);
  out.write("data", 4);
  u32(4);
  u16(0);
  u16(0);
  out.close();
  CHECK_THROWS_WITH_AS(noise::read_wav(dir / "stereo.wav"),
                       doctest::Contains("UnsupportedChannels"), Error);

  CHECK_THROWS_WITH_AS(noise::write_wav(dir / "e.wav", noise::Waveform{{}, 16000}),
                       doctest::Contains("EmptyAudio"), Error);
}

TEST_CASE("equal-rms mixing gains") {
  Rng rng(302);
  auto clean = random_wave(4000, 0.3, rng);
  noise::Waveform n = clean;  // identical rms by construction
  auto at0 = noise::mix_at_snr(clean, n, {"n", 0.0, 1});
  CHECK(at0.gain == doctest::Approx(1.0).epsilon(1e-12));
  auto at20 = noise::mix_at_snr(clean, n, {"n", 20.0, 1});
  CHECK(at20.gain == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("measured snr equals the target before quantization") {
  Rng rng(303);
  for (double level : {0.0, 5.0, 10.0, 15.0, 20.0}) {
    auto clean = random_wave(3000, 0.2, rng);
    auto n = random_wave(5000, 0.35, rng);
    auto mix = noise::mix_at_snr(clean, n, {"n", level, 42});
    const double measured = noise::measure_snr(clean, mix.mixed);
    CHECK(std::abs(measured - level) < 1e-9);
  }
}

TEST_CASE("snr measurement sentinels") {
  Rng rng(304);
  auto w = random_wave(100, 0.2, rng);
  CHECK(std::isinf(noise::measure_snr(w, w)));
  CHECK(noise::measure_snr(w, w) > 0);

  // near-silent clean against loud noise: large negative dB
  noise::Waveform tiny{std::vector<double>(100, 1e-8), 16000};
  noise::Waveform loud = tiny;
  for (std::size_t i = 0; i < loud.samples.size(); ++i)
    loud.samples[i] += (i % 2 ? 0.5 : -0.5);
  CHECK(noise::measure_snr(tiny, loud) < -80.0);

  noise::Waveform a{std::vector<double>(10, 0.1), 16000};
  noise::Waveform b{std::vector<double>(11, 0.1), 16000};
  CHECK_THROWS_WITH_AS(noise::measure_snr(a, b), doctest::Contains("LengthMismatch"), Error);
}

TEST_CASE("mixing rejects silent inputs and rate mismatch") {
  Rng rng(305);
  auto clean = random_wave(100, 0.2, rng);
  noise::Waveform silent{std::vector<double>(100, 0.0), 16000};
  CHECK_THROWS_WITH_AS(noise::mix_at_snr(clean, silent, {"n", 10.0, 0}),
                       doctest::Contains("SilentSignal"), Error);
  CHECK_THROWS_WITH_AS(noise::mix_at_snr(silent, clean, {"n", 10.0, 0}),
                       doctest::Contains("SilentSignal"), Error);
  auto other_rate = random_wave(100, 0.2, rng, 8000);
  CHECK_THROWS_WITH_AS(noise::mix_at_snr(clean, other_rate, {"n", 10.0, 0}),
                       doctest::Contains("SampleRateMismatch"), Error);
}

TEST_CASE("gain shrinks strictly as snr grows") {
  Rng rng(306);
  auto clean = random_wave(500, 0.25, rng);
  auto n = random_wave(900, 0.4, rng);
  double previous = std::numeric_limits<double>::infinity();
  for (double level : {0.0, 5.0, 10.0, 15.0, 20.0}) {
    auto mix = noise::mix_at_snr(clean, n, {"n", level, 9});
    CHECK(mix.gain < previous);
    previous = mix.gain;
  }
}

TEST_CASE("cyclic tiling preserves rms over whole copies") {
  Rng rng(307);
  auto n = random_wave(250, 0.3, rng);
  noise::Waveform clean = random_wave(1000, 0.2, rng);  // 4 whole copies
  auto mix = noise::mix_at_snr(clean, n, {"n", 0.0, 3});
  // reconstruct the segment the mixer used and compare rms
  noise::Waveform segment;
  segment.sample_rate = 16000;
  for (int i = 0; i < 1000; ++i) segment.samples.push_back(n.samples[i % 250]);
  CHECK(noise::rms(segment) == doctest::Approx(noise::rms(n)).epsilon(1e-6));
}

TEST_CASE("long noise uses a seeded random offset") {
  Rng rng(308);
  auto clean = random_wave(200, 0.2, rng);
  auto n = random_wave(5000, 0.3, rng);
  auto a = noise::mix_at_snr(clean, n, {"n", 10.0, 77});
  auto b = noise::mix_at_snr(clean, n, {"n", 10.0, 77});
  CHECK(a.noise_offset == b.noise_offset);
  auto c = noise::mix_at_snr(clean, n, {"n", 10.0, 78});
  CHECK(a.noise_offset != c.noise_offset);  // overwhelmingly likely over 4800 offsets
}

TEST_CASE("corrupt_testset emits the full grid with a manifest") {
  auto dir = helpers::temp_dir("corrupt");
  Rng rng(309);
  noise::WavList cleans, noises;
  for (int i = 0; i < 2; ++i) {
    auto w = random_wave(800, 0.2, rng);
    auto path = dir / ("clean" + std::to_string(i) + ".wav");
    noise::write_wav(path, w);
    cleans.emplace_back("utt" + std::to_string(i), path);
  }
  for (int i = 0; i < 5; ++i) {
    auto w = random_wave(1600, 0.3, rng);
    auto path = dir / ("noise" + std::to_string(i) + ".wav");
    noise::write_wav(path, w);
    noises.emplace_back("N" + std::to_string(i + 1), path);
  }
  const std::vector<double> levels{0, 5, 10, 15, 20};
  auto rows = noise::corrupt_testset(cleans, noises, levels, dir / "out", 5);
  CHECK(rows.size() == 2 * 5 * 5);
  for (const auto& row : rows) CHECK(std::filesystem::exists(row.output_path));
  noise::write_corruption_manifest(dir / "manifest.csv", rows);
  auto manifest = csv::read_file(dir / "manifest.csv");
  CHECK(manifest.size() == rows.size() + 1);

  // deterministic re-run
  auto rows2 = noise::corrupt_testset(cleans, noises, levels, dir / "out2", 5);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].gain == doctest::Approx(rows2[i].gain).epsilon(0));
    CHECK(rows[i].noise_offset == rows2[i].noise_offset);
  }
}

}  // TEST_SUITE
