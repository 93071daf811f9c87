#pragma once

#include <filesystem>
#include <vector>

namespace vr {

// Mono sample buffer. Amplitudes are nominally in [-1, 1] but are not clamped;
// intermediate stages (clipping simulation) rely on super-unit headroom.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 48000;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws InvalidInputError when the sample rate is non-positive or a sample is NaN/Inf.
void validate(const Waveform& wave);

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a mono RIFF/WAVE file: PCM16, PCM24 or IEEE float32.
// Integer PCM is scaled by 2^-(bits-1).
Waveform read_wav(const std::filesystem::path& path);

// PCM16 clamps to [-1, 1 - 2^-15] before quantization; float32 is lossless.
void write_wav(const Waveform& wave, const std::filesystem::path& path,
               WavEncoding encoding = WavEncoding::kFloat32);

// In-memory variants used by write_wav/read_wav and by tests that corrupt bytes.
std::vector<unsigned char> encode_wav(const Waveform& wave, WavEncoding encoding);
Waveform decode_wav(const std::vector<unsigned char>& bytes);

}  // namespace vr
