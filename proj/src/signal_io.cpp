#include "tdl/signal_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>

#include "tdl/errors.hpp"

namespace tdl {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

double decode_sample(const unsigned char* p, int bits) {
  std::int32_t v = 0;
  switch (bits) {
    case 16: v = static_cast<std::int16_t>(read_u16(p)); break;
    case 24: {
      std::uint32_t u = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16);
      if (u & 0x800000u) u |= 0xFF000000u;
      v = static_cast<std::int32_t>(u);
      break;
    }
    default: v = static_cast<std::int32_t>(read_u32(p)); break;
  }
  return static_cast<double>(v) / std::ldexp(1.0, bits - 1);
}

void encode_sample(std::string& out, double x, int bits) {
  const double scale = std::ldexp(1.0, bits - 1);
  const double lo = -scale;
  const double hi = scale - 1.0;
  const double code = std::clamp(std::nearbyint(std::clamp(x, -1.0, 1.0) * scale), lo, hi);
  const auto v = static_cast<std::int64_t>(code);
  const int bytes = bits / 8;
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

}  // namespace

void StereoRecording::validate() const {
  if (top.size() != bottom.size()) throw FormatError("channel lengths differ");
  if (sample_rate < kMinSampleRate)
    throw FormatError("sample rate " + std::to_string(sample_rate) + " Hz is below 44100 Hz");
  auto in_range = [](double s) { return s >= -1.0 && s <= 1.0; };
  if (!std::all_of(top.begin(), top.end(), in_range) ||
      !std::all_of(bottom.begin(), bottom.end(), in_range))
    throw FormatError("sample outside [-1, 1]");
}

bool is_standard_rate(int sample_rate) noexcept {
  return sample_rate == 48000 || sample_rate == 96000 || sample_rate == 192000;
}

StereoRecording load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) throw FileNotFoundError("no such file: " + path.string());
    throw IoError("cannot open " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();

  if (size < 12) throw CorruptFileError("file too short for a RIFF header");
  if (std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
    throw FormatError("not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0, format = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::uint32_t chunk_size = read_u32(data + pos + 4);
    const unsigned char* body = data + pos + 8;
    const std::size_t body_offset = pos + 8;
    if (std::memcmp(data + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16 || body_offset + 16 > size) throw CorruptFileError("truncated fmt chunk");
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
      if (format == kFormatExtensible) {
        if (chunk_size < 40 || body_offset + 40 > size) throw CorruptFileError("truncated fmt chunk");
        format = read_u16(body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(data + pos, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("data chunk precedes fmt chunk");
      if (channels != 2)
        throw ChannelCountError("expected 2 channels, file has " + std::to_string(channels));
      if (format != kFormatPcm) throw FormatError("only integer PCM is supported");
      if (bits != 16 && bits != 24 && bits != 32)
        throw FormatError("unsupported bit depth " + std::to_string(bits));
      if (body_offset + chunk_size > size) throw CorruptFileError("data chunk is truncated");
      const std::size_t frame_bytes = 2u * (bits / 8u);
      if (chunk_size % frame_bytes != 0) throw CorruptFileError("data chunk ends mid-frame");
      const std::size_t frames = chunk_size / frame_bytes;

      StereoRecording rec;
      rec.sample_rate = static_cast<int>(rate);
      rec.top.resize(frames);
      rec.bottom.resize(frames);
      const int step = bits / 8;
      for (std::size_t f = 0; f < frames; ++f) {
        const unsigned char* p = body + f * frame_bytes;
        rec.top[f] = decode_sample(p, bits);
        rec.bottom[f] = decode_sample(p + step, bits);
      }
      if (rec.sample_rate < kMinSampleRate)
        throw FormatError("sample rate " + std::to_string(rate) + " Hz is below 44100 Hz");
      if (!is_standard_rate(rec.sample_rate))
        std::cerr << "warning: " << path.string() << ": sample rate " << rate
                  << " Hz is not one of 48000/96000/192000\n";
      return rec;
    }
    pos = body_offset + chunk_size + (chunk_size & 1u);
  }
  if (!have_fmt) throw CorruptFileError("missing fmt chunk");
  throw CorruptFileError("missing data chunk");
}

void write_wav(const StereoRecording& recording, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 16 && bit_depth != 24 && bit_depth != 32)
    throw PreconditionError("bit depth must be 16, 24 or 32, got " + std::to_string(bit_depth));
  if (recording.top.size() != recording.bottom.size())
    throw PreconditionError("channel lengths differ");

  const std::uint32_t frames = static_cast<std::uint32_t>(recording.frames());
  const std::uint16_t block = static_cast<std::uint16_t>(2 * bit_depth / 8);
  const std::uint32_t data_size = frames * block;

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 2);
  put_u32(out, static_cast<std::uint32_t>(recording.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(recording.sample_rate) * block);
  put_u16(out, block);
  put_u16(out, static_cast<std::uint16_t>(bit_depth));
  out += "data";
  put_u32(out, data_size);
  for (std::size_t f = 0; f < recording.frames(); ++f) {
    encode_sample(out, recording.top[f], bit_depth);
    encode_sample(out, recording.bottom[f], bit_depth);
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed for " + path.string());
}

}  // namespace tdl
