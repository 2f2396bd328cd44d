#include "cmaudit/seed.hpp"

#include <string_view>

namespace cmaudit {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void mix_byte(std::uint64_t& h, unsigned char b) {
  h ^= b;
  h *= kFnvPrime;
}

void mix_u64(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) mix_byte(h, static_cast<unsigned char>(v >> (8 * i)));
}

void mix_string(std::uint64_t& h, std::string_view s) {
  mix_u64(h, s.size());
  for (char c : s) mix_byte(h, static_cast<unsigned char>(c));
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(const SeedContext& ctx) {
  std::uint64_t h = kFnvOffset;
  mix_u64(h, ctx.master_seed);
  mix_string(h, ctx.utt_id);
  mix_string(h, ctx.intervention);
  mix_string(h, ctx.configuration);
  return splitmix64(h);
}

}  // namespace cmaudit
