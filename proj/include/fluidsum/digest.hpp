#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <string_view>

namespace fluidsum {

// 128-bit non-cryptographic digest of canonical summary bytes. Two summaries
// are treated as equal iff their digests are equal; stores can additionally
// compare the canonical bytes themselves (paranoid mode) to rule out
// collisions during testing.
struct Hash128 {
  uint64_t hi = 0;
  uint64_t lo = 0;

  bool operator==(const Hash128&) const = default;
  auto operator<=>(const Hash128&) const = default;

  bool is_zero() const { return hi == 0 && lo == 0; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(32, '0');
    uint64_t parts[2] = {hi, lo};
    for (int p = 0; p < 2; ++p)
      for (int i = 0; i < 16; ++i)
        out[p * 16 + i] = digits[(parts[p] >> (60 - 4 * i)) & 0xf];
    return out;
  }

  // 16-byte big-endian serialization; defines the sort order of summary
  // records in exports and persisted containers.
  void to_bytes(uint8_t out[16]) const {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(hi >> (56 - 8 * i));
    for (int i = 0; i < 8; ++i) out[8 + i] = static_cast<uint8_t>(lo >> (56 - 8 * i));
  }

  static Hash128 from_bytes(const uint8_t in[16]) {
    Hash128 h;
    for (int i = 0; i < 8; ++i) h.hi = (h.hi << 8) | in[i];
    for (int i = 0; i < 8; ++i) h.lo = (h.lo << 8) | in[8 + i];
    return h;
  }
};

// MurmurHash3 x64/128 (Austin Appleby, public domain), fixed seed so digests
// are stable across runs and platforms. Operates on bytes only; all inputs
// are canonical serializations in external-string form, never raw pointers
// or interned ids.
Hash128 murmur3_128(const void* data, size_t len, uint32_t seed);

inline constexpr uint32_t kSummarySeed = 0x464c5549;  // stable, never change

inline Hash128 digest(std::string_view bytes) {
  return murmur3_128(bytes.data(), bytes.size(), kSummarySeed);
}

}  // namespace fluidsum

template <>
struct std::hash<fluidsum::Hash128> {
  size_t operator()(const fluidsum::Hash128& h) const noexcept {
    return static_cast<size_t>(h.hi ^ h.lo);
  }
};
