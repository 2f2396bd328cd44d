#include <doctest.h>

#include <fstream>
#include <iterator>
#include <set>

#include "cmaudit/audio.hpp"
#include "cmaudit/error.hpp"
#include "cmaudit/rng.hpp"
#include "cmaudit/seed.hpp"
#include "test_support.hpp"

using namespace cmaudit;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void put_le(std::string& s, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::string wav_header(int channels, int bits, std::uint32_t data_bytes, int format = 1) {
  std::string h = "RIFF";
  put_le(h, 36 + data_bytes, 4);
  h += "WAVEfmt ";
  put_le(h, 16, 4);
  put_le(h, static_cast<std::uint32_t>(format), 2);
  put_le(h, static_cast<std::uint32_t>(channels), 2);
  put_le(h, 16000, 4);
  put_le(h, 16000u * channels * bits / 8, 4);
  put_le(h, static_cast<std::uint32_t>(channels * bits / 8), 2);
  put_le(h, static_cast<std::uint32_t>(bits), 2);
  h += "data";
  put_le(h, data_bytes, 4);
  return h;
}

}  // namespace

TEST_CASE("quantization saturates and rounds half away from zero") {
  CHECK(quantize_sample(1.0) == 32767);
  CHECK(quantize_sample(0.0) == 0);
  CHECK(quantize_sample(-1.0) == -32768);
  CHECK(quantize_sample(2.5) == 32767);
  CHECK(quantize_sample(0.5 / 32768.0) == 1);
  CHECK(quantize_sample(-0.5 / 32768.0) == -1);
  CHECK(quantize_sample(0.49 / 32768.0) == 0);
  CHECK_THROWS_AS(quantize_sample(std::nan("")), Error);
}

TEST_CASE("zero file reads back as one second of zeros") {
  test::TempDir dir("audio");
  Waveform w;
  w.samples.assign(16000, 0.0);
  write_pcm(w, dir.path() / "z.wav");
  const Waveform r = read_pcm(dir.path() / "z.wav");
  CHECK(r.size() == 16000);
  CHECK(r.duration_s() == doctest::Approx(1.0));
  CHECK(r.id == "z");
  for (double s : r.samples) CHECK(s == 0.0);
}

TEST_CASE("sample 32767 reads as 32767/32768") {
  test::TempDir dir("audio");
  std::string bytes = wav_header(1, 16, 2);
  put_le(bytes, 32767, 2);
  std::ofstream(dir.path() / "one.wav", std::ios::binary) << bytes;
  const Waveform r = read_pcm(dir.path() / "one.wav");
  REQUIRE(r.size() == 1);
  CHECK(r.samples[0] == 32767.0 / 32768.0);
}

TEST_CASE("random 16-bit content survives read then write byte for byte") {
  test::TempDir dir("audio");
  Rng rng(7);
  std::string bytes = wav_header(1, 16, 2 * 5000);
  for (int i = 0; i < 5000; ++i) put_le(bytes, static_cast<std::uint32_t>(rng.next_u64() & 0xffff), 2);
  std::ofstream(dir.path() / "a.wav", std::ios::binary) << bytes;
  write_pcm(read_pcm(dir.path() / "a.wav"), dir.path() / "b.wav");
  CHECK(slurp(dir.path() / "a.wav") == slurp(dir.path() / "b.wav"));
}

TEST_CASE("write then read is lossless on the 16-bit grid") {
  test::TempDir dir("audio");
  Rng rng(3);
  Waveform w;
  for (int i = 0; i < 2000; ++i)
    w.samples.push_back(static_cast<double>(static_cast<int>(rng.uniform_index(65536)) - 32768) / 32768.0);
  write_pcm(w, dir.path() / "g.wav");
  CHECK(read_pcm(dir.path() / "g.wav").samples == w.samples);
}

TEST_CASE("unsupported WAVE variants are rejected") {
  test::TempDir dir("audio");
  std::ofstream(dir.path() / "stereo.wav", std::ios::binary) << wav_header(2, 16, 4) + std::string(4, '\0');
  CHECK_THROWS_AS(read_pcm(dir.path() / "stereo.wav"), ParseError);
  std::ofstream(dir.path() / "b24.wav", std::ios::binary) << wav_header(1, 24, 3) + std::string(3, '\0');
  CHECK_THROWS_AS(read_pcm(dir.path() / "b24.wav"), ParseError);
  std::ofstream(dir.path() / "float.wav", std::ios::binary) << wav_header(1, 16, 2, 3) + std::string(2, '\0');
  CHECK_THROWS_AS(read_pcm(dir.path() / "float.wav"), ParseError);
  std::ofstream(dir.path() / "junk.wav", std::ios::binary) << "not a wave file at all";
  CHECK_THROWS_AS(read_pcm(dir.path() / "junk.wav"), ParseError);
  CHECK_THROWS_AS(read_pcm(dir.path() / "missing.wav"), Error);
}

TEST_CASE("derive_seed is a pure function of its inputs") {
  const SeedContext base{42, "LA_T_1000001", "white_noise", "A"};
  CHECK(derive_seed(base) == derive_seed(base));

  SeedContext other = base;
  other.utt_id = "LA_T_1000002";
  CHECK(derive_seed(other) != derive_seed(base));
  other = base;
  other.intervention = "mu_law";
  CHECK(derive_seed(other) != derive_seed(base));
  other = base;
  other.configuration = "B";
  CHECK(derive_seed(other) != derive_seed(base));

  // Field boundaries are part of the encoding.
  CHECK(derive_seed({1, "ab", "c", ""}) != derive_seed({1, "a", "bc", ""}));
}

TEST_CASE("changing only the master seed changes every file's seed") {
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 500; ++i) {
    const std::string id = "SYN_T_" + std::to_string(i);
    const auto a = derive_seed({1, id, "codec", "C"});
    const auto b = derive_seed({2, id, "codec", "C"});
    CHECK(a != b);
    seen.insert(a);
    seen.insert(b);
  }
  CHECK(seen.size() == 1000);
}

TEST_CASE("derive_seed matches an independent FNV-1a + splitmix64 computation") {
  // Values computed outside this code base from the documented byte encoding.
  CHECK(derive_seed({0, "", "", ""}) == 0xb866c305c9207e99ULL);
  CHECK(derive_seed({42, "LA_T_1000001", "white_noise", "A"}) == 0x352588b1997dd907ULL);
}

TEST_CASE("floor_count is exact on products that are integers in decimal") {
  CHECK(floor_count(0.5, 11) == 5);
  CHECK(floor_count(1.0, 100) == 100);
  CHECK(floor_count(0.0, 100) == 0);
  CHECK(floor_count(0.29, 100) == 29);  // 0.29*100 = 28.999999999999996
  CHECK(floor_count(0.7, 10) == 7);
}

TEST_CASE("rng uniform_index stays in range and covers it") {
  Rng rng(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto k = rng.uniform_index(7);
    CHECK(k < 7);
    seen.insert(k);
  }
  CHECK(seen.size() == 7);
}
