#include "edrlmea/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "edrlmea/csv.hpp"
#include "edrlmea/rng.hpp"

namespace edrlmea::noise {

namespace {

constexpr double kScale = 32767.0;

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::IoError, "cannot open " + path.string());

  char tag[4];
  in.read(tag, 4);
  require(in.good() && std::memcmp(tag, "RIFF", 4) == 0, Errc::UnsupportedEncoding,
          "not a RIFF file: " + path.string());
  read_u32(in);  // total size
  in.read(tag, 4);
  require(in.good() && std::memcmp(tag, "WAVE", 4) == 0, Errc::UnsupportedEncoding,
          "not a WAVE file: " + path.string());

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t sample_rate = 0;
  Waveform w;

  while (in.read(tag, 4)) {
    const std::uint32_t chunk_size = read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = read_u16(in);
      channels = read_u16(in);
      sample_rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      if (chunk_size > 16) in.seekg(chunk_size - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      require(have_fmt, Errc::UnsupportedEncoding, "data chunk before fmt chunk");
      require(format == 1, Errc::UnsupportedEncoding,
              "only PCM encoding supported in " + path.string());
      require(channels == 1, Errc::UnsupportedChannels,
              "only mono supported, file has " + std::to_string(channels) + " channels");
      require(bits == 16, Errc::UnsupportedEncoding,
              "only 16-bit samples supported, file has " + std::to_string(bits));
      const std::size_t n = chunk_size / 2;
      if (n == 0) fail(Errc::EmptyAudio, "zero-length audio in " + path.string());
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t raw = read_u16(in);
        const std::int16_t s = static_cast<std::int16_t>(raw);
        w.samples[i] = std::max(static_cast<double>(s) / kScale, -1.0);
      }
      require(in.good(), Errc::IoError, "truncated data chunk in " + path.string());
      w.sample_rate = static_cast<int>(sample_rate);
      return w;
    } else {
      in.seekg(chunk_size + (chunk_size & 1u), std::ios::cur);
    }
  }
  fail(Errc::EmptyAudio, "no data chunk in " + path.string());
}

WriteStats write_wav(const std::filesystem::path& path, const Waveform& w) {
  require(!w.samples.empty(), Errc::EmptyAudio, "refusing to write zero-length audio");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::IoError, "cannot write " + path.string());

  const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  write_u16(out, 2);   // block align
  write_u16(out, 16);  // bits
  out.write("data", 4);
  write_u32(out, data_bytes);

  WriteStats stats;
  for (double s : w.samples) {
    double clamped = s;
    if (clamped > 1.0) { clamped = 1.0; ++stats.clipped; }
    if (clamped < -1.0) { clamped = -1.0; ++stats.clipped; }
    const auto q = static_cast<std::int16_t>(std::lround(clamped * kScale));
    write_u16(out, static_cast<std::uint16_t>(q));
  }
  require(out.good(), Errc::IoError, "write failed for " + path.string());
  return stats;
}

double rms(const Waveform& w) {
  require(!w.samples.empty(), Errc::EmptyAudio, "rms of empty waveform");
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(w.samples.size()));
}

MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, const NoiseSpec& spec) {
  require(clean.sample_rate == noise.sample_rate, Errc::SampleRateMismatch,
          "clean is " + std::to_string(clean.sample_rate) + " Hz, noise is " +
              std::to_string(noise.sample_rate) + " Hz");
  require(std::isfinite(spec.snr_db), Errc::NonFiniteValue, "snr_db must be finite");
  const double clean_rms = rms(clean);
  require(clean_rms > 0.0, Errc::SilentSignal, "clean signal is silent");
  require(rms(noise) > 0.0, Errc::SilentSignal, "noise signal is silent");

  const std::size_t n = clean.samples.size();
  std::vector<double> segment(n);
  std::size_t offset = 0;
  if (noise.samples.size() > n) {
    Rng rng = Rng::derive(spec.seed, {0x0ff5e7});
    offset = static_cast<std::size_t>(rng.below(noise.samples.size() - n + 1));
    std::copy(noise.samples.begin() + static_cast<std::ptrdiff_t>(offset),
              noise.samples.begin() + static_cast<std::ptrdiff_t>(offset + n),
              segment.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i) segment[i] = noise.samples[i % noise.samples.size()];
  }

  Waveform segment_wave{segment, clean.sample_rate};
  const double seg_rms = rms(segment_wave);
  require(seg_rms > 0.0, Errc::SilentSignal, "selected noise segment is silent");

  MixResult result;
  result.gain = (clean_rms / seg_rms) * std::pow(10.0, -spec.snr_db / 20.0);
  result.noise_offset = offset;
  result.mixed.sample_rate = clean.sample_rate;
  result.mixed.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    result.mixed.samples[i] = clean.samples[i] + result.gain * segment[i];
  return result;
}

double measure_snr(const Waveform& clean, const Waveform& noisy) {
  require(clean.samples.size() == noisy.samples.size(), Errc::LengthMismatch,
          "signals must have equal length");
  Waveform diff;
  diff.sample_rate = clean.sample_rate;
  diff.samples.resize(clean.samples.size());
  for (std::size_t i = 0; i < clean.samples.size(); ++i)
    diff.samples[i] = noisy.samples[i] - clean.samples[i];
  const double noise_rms = rms(diff);
  const double clean_rms = rms(clean);
  if (noise_rms == 0.0) return std::numeric_limits<double>::infinity();
  if (clean_rms == 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(clean_rms / noise_rms);
}

std::vector<ManifestRow> corrupt_testset(const WavList& clean_list, const WavList& noise_list,
                                         const std::vector<double>& snr_levels,
                                         const std::filesystem::path& output_dir,
                                         std::uint64_t seed) {
  require(!clean_list.empty() && !noise_list.empty() && !snr_levels.empty(),
          Errc::InvalidConfig, "clean list, noise list and SNR levels must be nonempty");
  std::filesystem::create_directories(output_dir);

  std::vector<Waveform> cleans, noises;
  cleans.reserve(clean_list.size());
  noises.reserve(noise_list.size());
  for (const auto& [_, path] : clean_list) cleans.push_back(read_wav(path));
  for (const auto& [_, path] : noise_list) noises.push_back(read_wav(path));

  std::vector<ManifestRow> rows;
  rows.reserve(clean_list.size() * noise_list.size() * snr_levels.size());
  for (std::size_t ci = 0; ci < clean_list.size(); ++ci) {
    for (std::size_t ni = 0; ni < noise_list.size(); ++ni) {
      for (std::size_t li = 0; li < snr_levels.size(); ++li) {
        NoiseSpec spec;
        spec.noise_id = noise_list[ni].first;
        spec.snr_db = snr_levels[li];
        spec.seed = mix64(seed ^ mix64(ci) ^ mix64(0x1000 + ni) ^ mix64(0x2000 + li));
        MixResult mix = mix_at_snr(cleans[ci], noises[ni], spec);

        std::string name = clean_list[ci].first + "__" + spec.noise_id + "__" +
                           csv::format_double(spec.snr_db) + "dB.wav";
        const std::filesystem::path out_path = output_dir / name;
        write_wav(out_path, mix.mixed);

        ManifestRow row;
        row.clean_id = clean_list[ci].first;
        row.noise_id = spec.noise_id;
        row.snr_db = spec.snr_db;
        row.output_path = out_path.string();
        row.gain = mix.gain;
        row.noise_offset = mix.noise_offset;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_corruption_manifest(const std::filesystem::path& path,
                               const std::vector<ManifestRow>& rows) {
  std::vector<std::vector<std::string>> out;
  out.push_back({"clean_id", "noise_id", "snr_db", "output_path", "gain", "noise_offset"});
  for (const auto& r : rows)
    out.push_back({r.clean_id, r.noise_id, csv::format_double(r.snr_db), r.output_path,
                   csv::format_double(r.gain), std::to_string(r.noise_offset)});
  csv::write_file(path, out);
}

}  // namespace edrlmea::noise
