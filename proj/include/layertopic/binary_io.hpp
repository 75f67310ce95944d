#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <type_traits>

// Little-endian primitives shared by the HSD1 and EMB1 containers.
namespace layertopic::binary {

template <typename T>
  requires std::is_integral_v<T>
void write_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(bits & 0xFFu);
    bits = static_cast<U>(bits >> 8);
  }
  out.write(bytes.data(), bytes.size());
}

/// Returns false on short read.
template <typename T>
  requires std::is_integral_v<T>
bool read_le(std::istream& in, T& value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) return false;
  using U = std::make_unsigned_t<T>;
  U bits = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) bits = static_cast<U>((bits << 8) | bytes[i]);
  value = static_cast<T>(bits);
  return true;
}

inline void write_f32_le(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float v : values) write_le(out, std::bit_cast<std::uint32_t>(v));
  }
}

inline bool read_f32_le(std::istream& in, std::span<float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
    return in.gcount() == static_cast<std::streamsize>(values.size_bytes());
  } else {
    for (float& v : values) {
      std::uint32_t bits = 0;
      if (!read_le(in, bits)) return false;
      v = std::bit_cast<float>(bits);
    }
    return true;
  }
}

inline bool read_magic(std::istream& in, const char (&magic)[5]) {
  char got[4] = {};
  in.read(got, 4);
  return in.gcount() == 4 && std::memcmp(got, magic, 4) == 0;
}

}  // namespace layertopic::binary
