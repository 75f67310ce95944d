#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace layertopic::harness {

/// 64-bit FNV-1a; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of one grid run, a pure function of its coordinates.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view dataset,
                                 std::string_view arm, std::string_view config_tag,
                                 std::size_t nr_topics, std::size_t run_idx) {
  std::string key;
  key.append(dataset).push_back('\x1f');
  key.append(arm).push_back('\x1f');
  key.append(config_tag).push_back('\x1f');
  key += std::to_string(nr_topics);
  key.push_back('\x1f');
  key += std::to_string(run_idx);
  return splitmix64(base_seed ^ fnv1a(key));
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return out;
}

}  // namespace layertopic::harness
