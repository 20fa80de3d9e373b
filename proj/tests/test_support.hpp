#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace tdl::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tdl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void append_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void append_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

// Hand-built canonical RIFF/WAVE header followed by `payload` as the data chunk.
inline std::string wav_bytes(std::uint16_t format, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                             const std::string& payload, std::uint32_t declared_data_size = 0xFFFFFFFFu) {
  const std::uint32_t data_size = declared_data_size == 0xFFFFFFFFu ? static_cast<std::uint32_t>(payload.size())
                                                                    : declared_data_size;
  std::string s = "RIFF";
  append_u32(s, 36 + data_size);
  s += "WAVEfmt ";
  append_u32(s, 16);
  append_u16(s, format);
  append_u16(s, channels);
  append_u32(s, rate);
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  append_u32(s, rate * block);
  append_u16(s, block);
  append_u16(s, bits);
  s += "data";
  append_u32(s, data_size);
  s += payload;
  return s;
}

}  // namespace tdl::testing
