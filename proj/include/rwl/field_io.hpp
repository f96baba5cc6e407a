#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rwl/grid.hpp"

namespace rwl {

// Binary field format: "RWL1", u32 n, u32 J, then N^n (re, im) pairs of
// little-endian IEEE doubles in row-major order.
namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw DataError("truncated field file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace detail

inline constexpr char kFieldMagic[4] = {'R', 'W', 'L', '1'};

inline void write_field(std::ostream& os, const DiscreteField& u) {
  os.write(kFieldMagic, 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid().n));
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid().J));
  for (const auto& v : u.values()) {
    detail::put_le<double>(os, v.real());
    detail::put_le<double>(os, v.imag());
  }
  if (!os) throw DataError("failed to write field");
}

inline DiscreteField read_field(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kFieldMagic, 4) != 0) throw DataError("not an RWL1 field file");
  const auto n = detail::get_le<std::uint32_t>(is);
  const auto J = detail::get_le<std::uint32_t>(is);
  const TorusGrid grid = make_grid(static_cast<int>(n), static_cast<int>(J));
  DiscreteField u(grid);
  for (auto& v : u.values()) {
    const double re = detail::get_le<double>(is);
    const double im = detail::get_le<double>(is);
    v = {re, im};
  }
  if (!u.all_finite()) throw DataError("field file contains non-finite values");
  return u;
}

inline void save_field(const std::string& path, const DiscreteField& u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  write_field(os, u);
}

inline DiscreteField load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  return read_field(is);
}

}  // namespace rwl
