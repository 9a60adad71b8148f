// Copyright 2026 The drnnsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "drnnsep/common.hpp"

namespace drnnsep {

/// A mono time-domain signal.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double energy() const {
    return std::inner_product(samples.begin(), samples.end(), samples.begin(), 0.0);
  }

  void validate() const {
    if (sample_rate <= 0) throw ConfigError("AudioClip: sample rate must be positive");
    if (samples.empty()) throw InputError("AudioClip: empty clip");
  }
};

enum class SampleFormat { pcm16, float32 };

/// Use every channel averaged, or pick one by index.
inline constexpr int kDownmix = -1;

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}
inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

inline std::int16_t quantize_pcm16(double x) {
  const double q = std::nearbyint(x * 32768.0);
  return static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0));
}

}  // namespace detail

/// Reads a RIFF WAV file (PCM 16-bit or IEEE float 32-bit, any channel count).
inline AudioClip read_wav(const std::filesystem::path& path, int channel = kDownmix) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const auto fail = [&](const std::string& why) {
    return FormatError(path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  int format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t len = detail::read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) {
      // Tolerate a truncated final data chunk, as many writers do.
      if (std::memcmp(chunk, "data", 4) != 0) throw fail("truncated chunk");
    }
    const std::size_t avail = std::min(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw fail("short fmt chunk");
      format = detail::read_u16(chunk + 8);
      channels = detail::read_u16(chunk + 10);
      rate = detail::read_u32(chunk + 12);
      bits = detail::read_u16(chunk + 22);
      if (format == 0xFFFE && avail >= 26) format = detail::read_u16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = avail;
    }
    pos = body + len + (len & 1);
  }
  if (channels == 0 || rate == 0) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32)
    throw fail(detail::concat("unsupported sample format ", format, "/", bits, " bits"));
  if (channel != kDownmix && (channel < 0 || channel >= channels))
    throw ConfigError(detail::concat(path.string(), ": channel ", channel,
                                     " out of range (file has ", channels, ")"));

  const std::size_t width = static_cast<std::size_t>(bits / 8);
  const std::size_t frames = data_size / (width * channels);
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      if (channel != kDownmix && c != channel) continue;
      const unsigned char* p = data + (i * channels + c) * width;
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(detail::read_u16(p)) / 32768.0;
      } else {
        const std::uint32_t u = detail::read_u32(p);
        float f;
        std::memcpy(&f, &u, sizeof f);
        v = f;
      }
      acc += v;
    }
    clip.samples[i] = channel == kDownmix ? acc / channels : acc;
  }
  return clip;
}

/// Writes a mono WAV file. PCM16 samples are rounded to the nearest step of
/// 1/32768 and clipped to [-1, 1 - 2^-15].
inline void write_wav(const std::filesystem::path& path, const AudioClip& clip,
                      SampleFormat format = SampleFormat::float32) {
  const std::uint16_t bits = format == SampleFormat::pcm16 ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.size() * (bits / 8));
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  detail::put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, format == SampleFormat::pcm16 ? 1 : 3);
  detail::put_u16(out, 1);
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * (bits / 8));
  detail::put_u16(out, bits / 8);
  detail::put_u16(out, bits);
  out += "data";
  detail::put_u32(out, data_bytes);
  for (double x : clip.samples) {
    if (format == SampleFormat::pcm16) {
      detail::put_u16(out, static_cast<std::uint16_t>(detail::quantize_pcm16(x)));
    } else {
      const float f = static_cast<float>(x);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      detail::put_u32(out, u);
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw InputError("write failed: " + path.string());
}

/// Rational-ratio polyphase resampler.
///
/// The ratio target/source is reduced to L/M. Conceptually the input is
/// upsampled by L, filtered by a Kaiser-windowed sinc low-pass (beta 8.6,
/// 16 zero crossings per side, cutoff at 0.5/max(L, M) cycles per upsampled
/// sample, gain L) and decimated by M. Only the taps landing on non-zero
/// upsampled samples are evaluated, so output j reads input k with the tap
/// h[j*M - k*L].
inline AudioClip resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw ConfigError("resample: target rate must be positive");
  if (clip.sample_rate == target_rate) return clip;
  const long g = std::gcd(static_cast<long>(clip.sample_rate), static_cast<long>(target_rate));
  const long up = target_rate / g;
  const long down = clip.sample_rate / g;
  const long widest = std::max(up, down);
  constexpr int kZeroCrossings = 16;
  constexpr double kBeta = 8.6;
  const long half = kZeroCrossings * widest;
  const double cutoff = 0.5 / static_cast<double>(widest);
  const double norm = std::cyl_bessel_i(0.0, kBeta);

  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  for (long n = -half; n <= half; ++n) {
    const double x = 2.0 * cutoff * static_cast<double>(n);
    const double sinc = n == 0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    const double r = static_cast<double>(n) / static_cast<double>(half);
    const double kaiser = std::cyl_bessel_i(0.0, kBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / norm;
    taps[static_cast<std::size_t>(n + half)] = 2.0 * cutoff * up * sinc * kaiser;
  }

  const long in_len = static_cast<long>(clip.size());
  const long out_len = (in_len * up + down - 1) / down;
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.assign(static_cast<std::size_t>(out_len), 0.0);
  for (long j = 0; j < out_len; ++j) {
    const long pos = j * down;
    long k_lo = (pos - half + up - 1) / up;
    if (pos - half < 0) k_lo = -((half - pos) / up);
    const long k_hi = (pos + half) / up;
    double acc = 0.0;
    for (long k = std::max(0L, k_lo); k <= std::min(in_len - 1, k_hi); ++k)
      acc += clip.samples[static_cast<std::size_t>(k)] *
             taps[static_cast<std::size_t>(pos - k * up + half)];
    out.samples[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

/// read_wav followed by resampling to `target_rate` when the rates differ.
inline AudioClip load_audio(const std::filesystem::path& path, int target_rate,
                            int channel = kDownmix) {
  return resample(read_wav(path, channel), target_rate);
}

}  // namespace drnnsep
