#include "cmaudit/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cmaudit/error.hpp"

namespace cmaudit {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

}  // namespace

Waveform read_pcm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) -> ParseError {
    return ParseError(path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  bool have_fmt = false;
  int sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a data chunk whose declared size overruns the file.
      if (std::memcmp(chunk, "data", 4) == 0) {
        data = bytes.data() + body;
        data_size = bytes.size() - body;
        break;
      }
      throw fail("truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("fmt chunk too small");
      const unsigned char* f = bytes.data() + body;
      std::uint16_t format = read_u16(f);
      const std::uint16_t channels = read_u16(f + 2);
      sample_rate = static_cast<int>(read_u32(f + 4));
      const std::uint16_t bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw fail("extensible fmt chunk too small");
        format = read_u16(f + 24);
      }
      if (format != kFormatPcm) throw fail("unsupported sample format " + std::to_string(format));
      if (channels != 1) throw fail("expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw fail("unsupported bit depth " + std::to_string(bits));
      if (sample_rate <= 0) throw fail("invalid sample rate");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");

  Waveform w;
  w.sample_rate_hz = sample_rate;
  w.id = path.stem().string();
  const std::size_t n = data_size / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::int16_t>(read_u16(data + 2 * i));
    w.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return w;
}

void write_pcm(const Waveform& w, const std::filesystem::path& path) {
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (double x : w.samples) put_u16(out, static_cast<std::uint16_t>(quantize_sample(x)));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write failed for " + path.string());
}

std::int16_t quantize_sample(double x) {
  if (std::isnan(x)) throw Error("cannot quantize a NaN sample");
  const double scaled = x * 32768.0;
  double r = std::round(scaled);  // halves go away from zero
  r = std::clamp(r, -32768.0, 32767.0);
  return static_cast<std::int16_t>(r);
}

Waveform quantize_16bit(Waveform w) {
  for (double& x : w.samples) x = quantize_sample(x) / 32768.0;
  return w;
}

void clip_in_place(std::vector<double>& samples) {
  for (double& x : samples) x = std::clamp(x, -1.0, 1.0);
}

double mean_square(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double x : samples) acc += x * x;
  return acc / static_cast<double>(samples.size());
}

}  // namespace cmaudit
