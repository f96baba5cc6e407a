#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rwl/dyadic.hpp"
#include "rwl/error.hpp"
#include "rwl/filter_table_data.hpp"
#include "rwl/grid.hpp"

namespace rwl {

// Orthonormal conjugate-mirror lowpass filter (sum = sqrt 2).
struct Filter {
  std::string name;
  std::vector<double> lowpass;
  double alpha_default = 0.0;

  int length() const { return static_cast<int>(lowpass.size()); }
  bool smooth() const { return alpha_default > 0.0; }

  // g[m] = (-1)^m h[L-1-m]; for the Haar filter this is (+1, -1)/sqrt 2.
  std::vector<double> highpass() const {
    const int L = length();
    std::vector<double> g(lowpass.size());
    for (int m = 0; m < L; ++m) g[m] = ((m % 2) ? -1.0 : 1.0) * lowpass[L - 1 - m];
    return g;
  }
};

// Rows "name, length, c_0, ..., c_{length-1}, alpha_default"; '#' starts a comment.
class FilterTable {
 public:
  static FilterTable parse(std::istream& is) {
    FilterTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
      }
      const auto fail = [&](const std::string& why) {
        throw ConfigError("filter table line " + std::to_string(line_no) + ": " + why);
      };
      if (cells.size() < 4) fail("too few fields");
      Filter f;
      f.name = cells[0];
      int length = 0;
      try {
        length = std::stoi(cells[1]);
      } catch (const std::exception&) {
        fail("bad length");
      }
      if (length < 2 || length % 2 != 0) fail("length must be even and >= 2");
      if (cells.size() != static_cast<std::size_t>(length) + 3) fail("coefficient count does not match length");
      try {
        for (int m = 0; m < length; ++m) f.lowpass.push_back(std::stod(cells[2 + m]));
        f.alpha_default = std::stod(cells.back());
      } catch (const std::exception&) {
        fail("bad number");
      }
      const double sum = std::accumulate(f.lowpass.begin(), f.lowpass.end(), 0.0);
      double energy = 0.0;
      for (double c : f.lowpass) energy += c * c;
      if (std::fabs(sum - std::sqrt(2.0)) > 1e-10 || std::fabs(energy - 1.0) > 1e-10)
        fail("filter '" + f.name + "' is not an orthonormal lowpass filter");
      table.filters_.push_back(std::move(f));
    }
    return table;
  }

  static FilterTable load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open filter table " + path);
    return parse(is);
  }

  static const FilterTable& builtin() {
    static const FilterTable table = [] {
      std::istringstream is(detail::kBuiltinFilterTable);
      return parse(is);
    }();
    return table;
  }

  const Filter& find(const std::string& name) const {
    for (const auto& f : filters_)
      if (f.name == name) return f;
    throw ConfigError("unknown filter '" + name + "'");
  }

  // Shortest smooth filter: the default auxiliary compact system.
  const Filter& shortest_smooth() const {
    const Filter* best = nullptr;
    for (const auto& f : filters_)
      if (f.smooth() && (!best || f.length() < best->length())) best = &f;
    if (!best) throw ConfigError("filter table has no smooth filter");
    return *best;
  }

  const std::vector<Filter>& filters() const { return filters_; }

 private:
  std::vector<Filter> filters_;
};

// Periodized separable orthonormal wavelet transform on the torus grid.
//
// Coefficients use the Mallat layout in an array shaped like the field: the
// detail block of level j and direction eps occupies positions
// eps_a 2^j + k_a (k_a in [0, 2^j)) on each axis; after a full transform the
// single remaining scaling coefficient sits at position 0. Level j details
// belong to the dyadic cubes of S_j. The filter is centred on the cube by an
// offset of L/2 - 1 input samples.
class PeriodicDwt {
 public:
  PeriodicDwt(TorusGrid grid, Filter filter)
      : grid_(grid), filter_(std::move(filter)), highpass_(filter_.highpass()), offset_(filter_.length() / 2 - 1) {}

  const TorusGrid& grid() const { return grid_; }
  const Filter& filter() const { return filter_; }

  // Levels J-1 down to j_stop; leaves the scaling block [0, 2^j_stop)^n.
  void forward(std::span<cdouble> data, int j_stop = 0) const {
    check(data, j_stop);
    std::vector<cdouble> line, out;
    for (int j = grid_.J - 1; j >= j_stop; --j) {
      const int M = 2 << j;
      for (int axis = 0; axis < grid_.n; ++axis)
        for_each_line(M, axis, [&](std::size_t base, std::size_t stride) {
          gather(data, base, stride, M, line);
          out.assign(static_cast<std::size_t>(M), cdouble{});
          analysis_step(line, out);
          scatter(data, base, stride, out);
        });
    }
  }

  void inverse(std::span<cdouble> data, int j_stop = 0) const {
    check(data, j_stop);
    std::vector<cdouble> line, out;
    for (int j = j_stop; j <= grid_.J - 1; ++j) {
      const int M = 2 << j;
      for (int axis = grid_.n - 1; axis >= 0; --axis)
        for_each_line(M, axis, [&](std::size_t base, std::size_t stride) {
          gather(data, base, stride, M, line);
          out.assign(static_cast<std::size_t>(M), cdouble{});
          synthesis_step(line, out);
          scatter(data, base, stride, out);
        });
    }
  }

  // Position of the (j, eps, cube) detail coefficient.
  std::size_t slot(int j, const Direction& eps, const DyadicCube& q) const {
    Index3 p{0, 0, 0};
    for (int a = 0; a < grid_.n; ++a) p[a] = eps.eps[a] * (1 << j) + q.index[a];
    return grid_.flatten(p);
  }

  // Inverse of slot() for positions outside the scaling coefficient.
  struct SlotInfo {
    int j = -1;  // -1: the global scaling coefficient
    unsigned eps_bits = 0;
    Index3 cube{0, 0, 0};
  };
  SlotInfo describe(std::size_t flat) const {
    const Index3 p = grid_.unflatten(flat);
    int top = 0;
    for (int a = 0; a < grid_.n; ++a) top = std::max(top, p[a]);
    if (top == 0) return {};
    SlotInfo info;
    info.j = static_cast<int>(std::floor(std::log2(static_cast<double>(top))));
    for (int a = 0; a < grid_.n; ++a) {
      const int bit = (p[a] >> info.j) & 1;
      info.eps_bits = (info.eps_bits << 1) | static_cast<unsigned>(bit);
      info.cube[a] = p[a] - bit * (1 << info.j);
    }
    return info;
  }

 private:
  void check(std::span<cdouble> data, int j_stop) const {
    if (data.size() != grid_.size()) throw DataError("coefficient array does not match grid");
    if (j_stop < 0 || j_stop > grid_.J) throw RangeError("transform stop level out of range");
  }

  // Visits every 1-D line along `axis` inside the block [0, M)^n.
  template <class F>
  void for_each_line(int M, int axis, F&& f) const {
    const int n = grid_.n;
    const auto N = static_cast<std::size_t>(grid_.N());
    std::size_t stride = 1;
    for (int a = n - 1; a > axis; --a) stride *= N;
    Index3 idx{0, 0, 0};
    const int others = n - 1;
    std::size_t count = 1;
    for (int t = 0; t < others; ++t) count *= static_cast<std::size_t>(M);
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t rem = c;
      for (int a = n - 1; a >= 0; --a) {
        if (a == axis) {
          idx[a] = 0;
          continue;
        }
        idx[a] = static_cast<int>(rem % static_cast<std::size_t>(M));
        rem /= static_cast<std::size_t>(M);
      }
      f(grid_.flatten(idx), stride);
    }
  }

  static void gather(std::span<const cdouble> data, std::size_t base, std::size_t stride, int M,
                     std::vector<cdouble>& line) {
    line.resize(static_cast<std::size_t>(M));
    for (int t = 0; t < M; ++t) line[t] = data[base + static_cast<std::size_t>(t) * stride];
  }
  static void scatter(std::span<cdouble> data, std::size_t base, std::size_t stride, const std::vector<cdouble>& line) {
    for (std::size_t t = 0; t < line.size(); ++t) data[base + t * stride] = line[t];
  }

  void analysis_step(const std::vector<cdouble>& x, std::vector<cdouble>& out) const {
    const int M = static_cast<int>(x.size());
    const int half = M / 2;
    const int L = filter_.length();
    for (int k = 0; k < half; ++k) {
      cdouble lo{}, hi{};
      for (int m = 0; m < L; ++m) {
        const int t = (((2 * k + m - offset_) % M) + M) % M;
        lo += filter_.lowpass[m] * x[t];
        hi += highpass_[m] * x[t];
      }
      out[k] = lo;
      out[half + k] = hi;
    }
  }

  void synthesis_step(const std::vector<cdouble>& c, std::vector<cdouble>& out) const {
    const int M = static_cast<int>(c.size());
    const int half = M / 2;
    const int L = filter_.length();
    for (int k = 0; k < half; ++k) {
      const cdouble lo = c[k], hi = c[half + k];
      for (int m = 0; m < L; ++m) {
        const int t = (((2 * k + m - offset_) % M) + M) % M;
        out[t] += filter_.lowpass[m] * lo + highpass_[m] * hi;
      }
    }
  }

  TorusGrid grid_;
  Filter filter_;
  std::vector<double> highpass_;
  int offset_ = 0;
};

}  // namespace rwl
