#pragma once

#include <cstdint>
#include <string>

namespace cmaudit {

// Inputs from which every per-file random stream is derived.
struct SeedContext {
  std::uint64_t master_seed = 0;
  std::string utt_id;
  std::string intervention;
  std::string configuration;
};

// FNV-1a (64-bit) over a canonical byte encoding, followed by the splitmix64
// finalizer. The encoding is: master_seed as 8 little-endian bytes, then each
// string as its length (8 bytes, little-endian) followed by its UTF-8 bytes, in
// the order utt_id, intervention, configuration. The result does not depend on
// platform endianness or word size.
std::uint64_t derive_seed(const SeedContext& ctx);

}  // namespace cmaudit
