#pragma once

// Little-endian encode/decode for the fixed binary formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <type_traits>

namespace clare::detail {

template <typename T>
T byteswap(T value) noexcept {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

template <typename T>
void store_le(char* dst, T value) noexcept {
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  std::memcpy(dst, &value, sizeof(T));
}

template <typename T>
T load_le(const char* src) noexcept {
  T value;
  std::memcpy(&value, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  return value;
}

}  // namespace clare::detail
