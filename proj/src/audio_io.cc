#include "vocalrestore/audio_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "vocalrestore/error.h"
#include "vocalrestore/file_util.h"

namespace vr {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return pos_ + n <= bytes_.size(); }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void seek(std::size_t p) { pos_ = p; }

  uint32_t u32() {
    need(4);
    uint32_t v = bytes_[pos_] | (bytes_[pos_ + 1] << 8) |
                 (bytes_[pos_ + 2] << 16) |
                 (static_cast<uint32_t>(bytes_[pos_ + 3]) << 24);
    pos_ += 4;
    return v;
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::string tag() {
    need(4);
    std::string s(reinterpret_cast<const char*>(&bytes_[pos_]), 4);
    pos_ += 4;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (!has(n)) throw CorruptFileError("WAV header truncated");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u16(std::vector<unsigned char>& out, uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

void validate(const Waveform& wave) {
  if (wave.sample_rate <= 0)
    throw InvalidInputError("sample_rate must be positive");
  for (double s : wave.samples)
    if (!std::isfinite(s)) throw InvalidInputError("waveform has non-finite samples");
}

Waveform decode_wav(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes);
  if (!r.has(12)) throw FormatError("not a RIFF/WAVE file");
  if (r.tag() != "RIFF") throw FormatError("missing RIFF tag");
  r.u32();
  if (r.tag() != "WAVE") throw FormatError("missing WAVE tag");

  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  while (r.has(8)) {
    std::string id = r.tag();
    uint32_t size = r.u32();
    std::size_t body = r.pos();
    if (id == "fmt ") {
      if (size < 16 || !r.has(16)) throw CorruptFileError("fmt chunk truncated");
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (format == kFormatExtensible && size >= 40 && r.has(24)) {
        r.u16();  // cbSize
        r.u16();  // valid bits
        r.u32();  // channel mask
        format = r.u16();  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk");
      if (channels != 1)
        throw ChannelError("expected 1 channel, found " + std::to_string(channels));
      if (rate == 0) throw FormatError("sample rate is zero");
      bool ok = (format == kFormatPcm && (bits == 16 || bits == 24)) ||
                (format == kFormatFloat && bits == 32);
      if (!ok)
        throw FormatError("unsupported encoding: format " + std::to_string(format) +
                          ", " + std::to_string(bits) + " bits");
      const std::size_t width = bits / 8;
      if (size % width != 0 || r.remaining() < size)
        throw CorruptFileError("data chunk truncated");
      const std::size_t n = size / width;
      Waveform wave;
      wave.sample_rate = static_cast<int>(rate);
      wave.samples.resize(n);
      const unsigned char* p = bytes.data() + body;
      for (std::size_t i = 0; i < n; ++i, p += width) {
        if (bits == 16) {
          auto v = static_cast<int16_t>(p[0] | (p[1] << 8));
          wave.samples[i] = v / 32768.0;
        } else if (bits == 24) {
          int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
          if (v & 0x800000) v -= 0x1000000;
          wave.samples[i] = v / 8388608.0;
        } else {
          uint32_t u = p[0] | (p[1] << 8) | (p[2] << 16) |
                       (static_cast<uint32_t>(p[3]) << 24);
          wave.samples[i] = std::bit_cast<float>(u);
        }
      }
      return wave;
    }
    // Chunks are word aligned.
    std::size_t next = body + size + (size & 1u);
    if (next > bytes.size()) {
      if (id == "fmt ") throw CorruptFileError("fmt chunk truncated");
      break;
    }
    r.seek(next);
  }
  if (!have_fmt) throw FormatError("missing fmt chunk");
  throw CorruptFileError("missing data chunk");
}

std::vector<unsigned char> encode_wav(const Waveform& wave, WavEncoding encoding) {
  validate(wave);
  const bool pcm = encoding == WavEncoding::kPcm16;
  const uint16_t bits = pcm ? 16 : 32;
  const uint32_t width = bits / 8;
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * width);

  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, 1);
  put_u32(out, static_cast<uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<uint32_t>(wave.sample_rate) * width);
  put_u16(out, static_cast<uint16_t>(width));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : wave.samples) {
    if (pcm) {
      constexpr double kMax = 1.0 - 1.0 / 32768.0;
      double c = std::clamp(s, -1.0, kMax);
      auto q = static_cast<int16_t>(std::lround(c * 32768.0));
      put_u16(out, static_cast<uint16_t>(q));
    } else {
      put_u32(out, std::bit_cast<uint32_t>(static_cast<float>(s)));
    }
  }
  return out;
}

Waveform read_wav(const std::filesystem::path& path) {
  return decode_wav(read_file_bytes(path));
}

void write_wav(const Waveform& wave, const std::filesystem::path& path,
               WavEncoding encoding) {
  write_file_atomic(path, encode_wav(wave, encoding));
}

}  // namespace vr
