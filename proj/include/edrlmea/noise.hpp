#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "edrlmea/error.hpp"

namespace edrlmea::noise {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;
};

// 16-bit PCM mono only.
Waveform read_wav(const std::filesystem::path& path);

struct WriteStats {
  std::size_t clipped = 0;  // samples clamped into [-1, 1] before quantization
};
WriteStats write_wav(const std::filesystem::path& path, const Waveform& w);

double rms(const Waveform& w);

struct NoiseSpec {
  std::string noise_id;
  double snr_db = 0.0;  // paper levels: 0, 5, 10, 15, 20
  std::uint64_t seed = 0;
};

struct MixResult {
  Waveform mixed;
  double gain = 0.0;
  std::size_t noise_offset = 0;
};

// A noise segment of the clean signal's length is chosen (seeded random
// offset when the noise is longer, cyclic tiling when shorter), then scaled
// so that 20*log10(rms(clean)/rms(g*segment)) is exactly snr_db.
MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, const NoiseSpec& spec);

// 20*log10(rms(clean)/rms(noisy - clean)); +inf when the signals are
// identical, -inf when the clean signal is silent.
double measure_snr(const Waveform& clean, const Waveform& noisy);

struct ManifestRow {
  std::string clean_id;
  std::string noise_id;
  double snr_db = 0.0;
  std::string output_path;
  double gain = 0.0;
  std::size_t noise_offset = 0;
};

using WavList = std::vector<std::pair<std::string, std::filesystem::path>>;

// Emits |clean| x |noises| x |levels| mixed files under output_dir plus the
// manifest rows describing each one. Deterministic given the seed.
std::vector<ManifestRow> corrupt_testset(const WavList& clean_list, const WavList& noise_list,
                                         const std::vector<double>& snr_levels,
                                         const std::filesystem::path& output_dir,
                                         std::uint64_t seed);

void write_corruption_manifest(const std::filesystem::path& path,
                               const std::vector<ManifestRow>& rows);

}  // namespace edrlmea::noise
