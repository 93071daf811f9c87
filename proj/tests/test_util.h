#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vocalrestore/audio_io.h"

namespace testutil {

inline vr::Waveform noise(std::size_t n, uint64_t seed, double scale = 0.5, int sr = 48000) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  vr::Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (auto& s : w.samples) s = nd(gen);
  return w;
}

inline vr::Waveform sine(std::size_t n, double hz, double amp = 0.5, int sr = 48000) {
  vr::Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * 3.14159265358979323846 * hz * i / sr);
  return w;
}

// Hand-assembled RIFF/WAVE bytes.
inline std::vector<unsigned char> wav_bytes(uint16_t format, uint16_t bits, uint16_t channels,
                                            uint32_t sr, const std::vector<unsigned char>& data,
                                            uint32_t declared_data_size = 0xFFFFFFFFu) {
  std::vector<unsigned char> out;
  auto u32 = [&](uint32_t v) { for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF); };
  auto u16 = [&](uint16_t v) { out.push_back(v & 0xFF); out.push_back(v >> 8); };
  auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
  const uint32_t size = declared_data_size == 0xFFFFFFFFu ? data.size() : declared_data_size;
  tag("RIFF");
  u32(36 + static_cast<uint32_t>(data.size()));
  tag("WAVE");
  tag("fmt ");
  u32(16);
  u16(format);
  u16(channels);
  u32(sr);
  u32(sr * channels * bits / 8);
  u16(channels * bits / 8);
  u16(bits);
  tag("data");
  u32(size);
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

inline std::vector<unsigned char> pcm16(const std::vector<int16_t>& v) {
  std::vector<unsigned char> out;
  for (int16_t s : v) {
    const auto u = static_cast<uint16_t>(s);
    out.push_back(u & 0xFF);
    out.push_back(u >> 8);
  }
  return out;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("vr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace testutil
