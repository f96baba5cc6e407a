#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rwl/error.hpp"
#include "rwl/grid.hpp"

namespace rwl {

// Dyadic cube of the unit torus: scale j, side 2^-j, lower corner index * 2^-j.
struct DyadicCube {
  int n = 1;
  int j = 0;
  Index3 index{0, 0, 0};

  double side() const { return std::ldexp(1.0, -j); }
  double volume() const { return std::ldexp(1.0, -n * j); }
  int count_per_axis() const { return 1 << j; }

  bool contains(const std::array<double, 3>& x) const {
    for (int a = 0; a < n; ++a) {
      const double lo = index[a] * side();
      if (x[a] < lo || x[a] >= lo + side()) return false;
    }
    return true;
  }
  double center(int axis) const { return (index[axis] + 0.5) * side(); }

  // Position of the cube within its scale (row-major over the index tuple).
  std::size_t flat_index() const {
    std::size_t f = 0;
    for (int a = 0; a < n; ++a) f = f * static_cast<std::size_t>(count_per_axis()) + static_cast<std::size_t>(index[a]);
    return f;
  }

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;
};

inline DyadicCube make_cube(int n, int j, Index3 index) {
  if (j < 0) throw RangeError("negative cube scale");
  DyadicCube q{n, j, index};
  for (int a = 0; a < n; ++a)
    if (index[a] < 0 || index[a] >= q.count_per_axis()) throw RangeError("cube index outside [0, 2^j)");
  return q;
}

inline DyadicCube cube_from_flat(int n, int j, std::size_t flat) {
  DyadicCube q{n, j, {0, 0, 0}};
  const auto m = static_cast<std::size_t>(q.count_per_axis());
  for (int a = n - 1; a >= 0; --a) {
    q.index[a] = static_cast<int>(flat % m);
    flat /= m;
  }
  return q;
}

// epsilon in {0,1}^n \ {0}; the optional distinguished axis i0 (0-based)
// must carry a wavelet factor.
struct Direction {
  int n = 1;
  std::array<int, 3> eps{1, 0, 0};
  std::optional<int> i0;

  bool operator[](int axis) const { return eps[axis] != 0; }
  unsigned bits() const {
    unsigned b = 0;
    for (int a = 0; a < n; ++a) b = (b << 1) | static_cast<unsigned>(eps[a]);
    return b;
  }
  std::string str() const {
    std::string s;
    for (int a = 0; a < n; ++a) s += eps[a] ? '1' : '0';
    return s;
  }

  friend bool operator==(const Direction& x, const Direction& y) { return x.n == y.n && x.eps == y.eps; }
};

inline Direction make_direction(int n, std::array<int, 3> eps, std::optional<int> i0 = std::nullopt) {
  if (n < 1 || n > 3) throw RangeError("direction dimension must be 1..3");
  bool any = false;
  for (int a = 0; a < n; ++a) {
    if (eps[a] != 0 && eps[a] != 1) throw RangeError("direction entries must be 0 or 1");
    any = any || eps[a] == 1;
  }
  for (int a = n; a < 3; ++a) eps[a] = 0;
  if (!any) throw RangeError("direction must not be the zero tuple");
  if (i0) {
    if (*i0 < 0 || *i0 >= n) throw RangeError("distinguished axis out of range");
    if (eps[*i0] != 1) throw RangeError("distinguished axis must carry a wavelet factor");
  }
  return Direction{n, eps, i0};
}

// Parses "101" style bit strings.
inline Direction parse_direction(std::string_view s, std::optional<int> i0 = std::nullopt) {
  std::array<int, 3> eps{0, 0, 0};
  if (s.empty() || s.size() > 3) throw RangeError("direction string must have 1..3 characters");
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (s[a] != '0' && s[a] != '1') throw RangeError("direction string must contain only 0/1");
    eps[a] = s[a] - '0';
  }
  return make_direction(static_cast<int>(s.size()), eps, i0);
}

// All 2^n - 1 directions in increasing bit order.
inline std::vector<Direction> all_directions(int n) {
  std::vector<Direction> out;
  for (unsigned b = 1; b < (1u << n); ++b) {
    std::array<int, 3> eps{0, 0, 0};
    for (int a = 0; a < n; ++a) eps[a] = static_cast<int>((b >> (n - 1 - a)) & 1u);
    out.push_back(Direction{n, eps, std::nullopt});
  }
  return out;
}

inline std::vector<DyadicCube> cubes_at_scale(const TorusGrid& grid, int j) {
  if (j < 0 || j > grid.J) throw RangeError("scale " + std::to_string(j) + " outside [0, J]");
  const std::size_t count = std::size_t{1} << (grid.n * j);
  std::vector<DyadicCube> out;
  out.reserve(count);
  for (std::size_t f = 0; f < count; ++f) out.push_back(cube_from_flat(grid.n, j, f));
  return out;
}

// The lambda-th dyadic ancestor.
inline DyadicCube predecessor(const DyadicCube& q, int lambda) {
  if (lambda < 0 || lambda > q.j) throw RangeError("predecessor depth exceeds cube scale");
  DyadicCube p = q;
  p.j = q.j - lambda;
  for (int a = 0; a < q.n; ++a) p.index[a] = q.index[a] >> lambda;
  return p;
}

// Q + mu s(Q), wrapped around the torus.
inline DyadicCube translate(const DyadicCube& q, const Index3& mu) {
  DyadicCube t = q;
  const int m = q.count_per_axis();
  for (int a = 0; a < q.n; ++a) t.index[a] = static_cast<int>(((static_cast<long long>(q.index[a]) + mu[a]) % m + m) % m);
  return t;
}

// Splitting of cube space into 2^{n lambda} branches on each of which the
// predecessor map is injective. The children of a cube are enumerated in
// lexicographic order of their offset tuple (axis 0 most significant).
struct SplitFamily {
  int n = 1;
  int lambda = 0;

  std::size_t branch_count() const { return std::size_t{1} << (n * lambda); }

  std::size_t branch_of(const DyadicCube& q) const {
    if (q.j < lambda) throw RangeError("cube is coarser than the predecessor depth");
    const std::size_t mask = (std::size_t{1} << lambda) - 1;
    std::size_t k = 0;
    for (int a = 0; a < n; ++a) k = (k << lambda) | (static_cast<std::size_t>(q.index[a]) & mask);
    return k;
  }

  // W_k(parent): the member of branch k whose predecessor is `parent`.
  DyadicCube member(std::size_t k, const DyadicCube& parent) const {
    if (k >= branch_count()) throw RangeError("branch index out of range");
    DyadicCube c{n, parent.j + lambda, {0, 0, 0}};
    const std::size_t mask = (std::size_t{1} << lambda) - 1;
    for (int a = n - 1; a >= 0; --a) {
      const int offset = static_cast<int>(k & mask);
      k >>= lambda;
      c.index[a] = (parent.index[a] << lambda) + offset;
    }
    return c;
  }
};

inline SplitFamily canonical_split(int n, int lambda) {
  if (lambda < 0) throw RangeError("negative predecessor depth");
  return SplitFamily{n, lambda};
}

// Circular distance between two points of [0,1).
inline double circular_distance(double a, double b) {
  double d = std::fabs(a - b);
  d = std::fmod(d, 1.0);
  return std::min(d, 1.0 - d);
}

// Torus distance from a point to a cube (0 inside).
inline double dist(const std::array<double, 3>& x, const DyadicCube& q) {
  double s = 0.0;
  for (int a = 0; a < q.n; ++a) {
    const double d = std::max(0.0, circular_distance(x[a], q.center(a)) - 0.5 * q.side());
    s += d * d;
  }
  return std::sqrt(s);
}

// Torus distance between cubes: centre gap minus half sides, floored at 0 per axis.
inline double dist(const DyadicCube& q, const DyadicCube& k) {
  double s = 0.0;
  for (int a = 0; a < q.n; ++a) {
    const double d = std::max(0.0, circular_distance(q.center(a), k.center(a)) - 0.5 * (q.side() + k.side()));
    s += d * d;
  }
  return std::sqrt(s);
}

// (1 + dist/s)^{-n(1+delta)}
inline double decay_weight(double distance, double side, int n, double delta) {
  return std::pow(1.0 + distance / side, -n * (1.0 + delta));
}

// "j:i1,...,in"
inline DyadicCube parse_cube(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw RangeError("cube literal must look like j:i1,...,in");
  auto parse_int = [](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw RangeError("bad integer in cube literal: " + std::string(s));
    return v;
  };
  const int j = parse_int(text.substr(0, colon));
  std::string_view rest = text.substr(colon + 1);
  Index3 idx{0, 0, 0};
  int n = 0;
  while (true) {
    const auto comma = rest.find(',');
    if (n == 3) throw RangeError("cube literal has more than 3 indices");
    idx[n++] = parse_int(rest.substr(0, comma));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return make_cube(n, j, idx);
}

inline std::string format_cube(const DyadicCube& q) {
  std::string s = std::to_string(q.j) + ":";
  for (int a = 0; a < q.n; ++a) {
    if (a) s += ',';
    s += std::to_string(q.index[a]);
  }
  return s;
}

}  // namespace rwl
