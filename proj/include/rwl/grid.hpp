#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "rwl/error.hpp"

namespace rwl {

using cdouble = std::complex<double>;

// Integer frequency (or grid multi-index); only the first n entries are used.
using Index3 = std::array<int, 3>;

// Unit torus [0,1)^n sampled with N = 2^J points per axis.
struct TorusGrid {
  int n = 1;
  int J = 1;

  int N() const { return 1 << J; }
  double h() const { return 1.0 / N(); }
  std::size_t size() const {
    std::size_t s = 1;
    for (int i = 0; i < n; ++i) s *= static_cast<std::size_t>(N());
    return s;
  }
  // Quadrature weight h^n of one sample.
  double cell_volume() const { return std::pow(h(), n); }

  // Row-major: axis 0 varies slowest.
  Index3 unflatten(std::size_t flat) const {
    Index3 idx{0, 0, 0};
    const auto Nu = static_cast<std::size_t>(N());
    for (int a = n - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(flat % Nu);
      flat /= Nu;
    }
    return idx;
  }
  std::size_t flatten(const Index3& idx) const {
    std::size_t flat = 0;
    for (int a = 0; a < n; ++a) flat = flat * static_cast<std::size_t>(N()) + static_cast<std::size_t>(idx[a]);
    return flat;
  }
  // Signed frequency of a transform slot: {-N/2, ..., N/2-1}.
  int frequency_of_slot(int q) const { return q < N() / 2 ? q : q - N(); }
  Index3 frequency(std::size_t flat) const {
    Index3 k = unflatten(flat);
    for (int a = 0; a < n; ++a) k[a] = frequency_of_slot(k[a]);
    return k;
  }
  std::size_t slot_of_frequency(const Index3& k) const {
    Index3 q{0, 0, 0};
    for (int a = 0; a < n; ++a) q[a] = ((k[a] % N()) + N()) % N();
    return flatten(q);
  }

  friend bool operator==(const TorusGrid&, const TorusGrid&) = default;
};

inline int max_depth(int n) {
  switch (n) {
    case 1: return 14;
    case 2: return 10;
    case 3: return 6;
    default: return 0;
  }
}

inline TorusGrid make_grid(int n, int J) {
  if (n < 1 || n > 3) throw RangeError("grid dimension must be 1, 2 or 3, got " + std::to_string(n));
  if (J < 1 || J > max_depth(n))
    throw RangeError("depth " + std::to_string(J) + " outside [1, " + std::to_string(max_depth(n)) +
                     "] for n=" + std::to_string(n));
  return TorusGrid{n, J};
}

inline double frequency_norm(const Index3& k, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += static_cast<double>(k[a]) * k[a];
  return std::sqrt(s);
}

// Complex samples on a TorusGrid (physical space).
class DiscreteField {
 public:
  DiscreteField() = default;
  explicit DiscreteField(TorusGrid grid) : grid_(grid), values_(grid.size(), cdouble{}) {}
  DiscreteField(TorusGrid grid, std::vector<cdouble> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw DataError("value count does not match grid size");
  }

  template <class F>
  static DiscreteField sample(TorusGrid grid, F&& f) {
    DiscreteField u(grid);
    const double h = grid.h();
    for (std::size_t i = 0; i < u.size(); ++i) {
      const Index3 idx = grid.unflatten(i);
      std::array<double, 3> x{idx[0] * h, idx[1] * h, idx[2] * h};
      u.values_[i] = cdouble(f(x));
    }
    return u;
  }

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const cdouble> values() const { return values_; }
  std::span<cdouble> values() { return values_; }
  const cdouble& operator[](std::size_t i) const { return values_[i]; }
  cdouble& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const {
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  DiscreteField& operator+=(const DiscreteField& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  DiscreteField& operator-=(const DiscreteField& o) {
    require_same_grid(o);
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  DiscreteField& operator*=(cdouble c) {
    for (auto& v : values_) v *= c;
    return *this;
  }
  friend DiscreteField operator+(DiscreteField a, const DiscreteField& b) { return a += b; }
  friend DiscreteField operator-(DiscreteField a, const DiscreteField& b) { return a -= b; }
  friend DiscreteField operator*(cdouble c, DiscreteField a) { return a *= c; }

  void require_same_grid(const DiscreteField& o) const {
    if (!(grid_ == o.grid_)) throw DataError("fields live on different grids");
  }

 private:
  TorusGrid grid_{};
  std::vector<cdouble> values_;
};

// Fourier-series coefficients U(k) = integral of u(x) e^{-2 pi i k.x}, stored in
// transform-slot order (see TorusGrid::frequency).
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(TorusGrid grid) : grid_(grid), coeffs_(grid.size(), cdouble{}) {}

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return coeffs_.size(); }
  std::span<const cdouble> coefficients() const { return coeffs_; }
  std::span<cdouble> coefficients() { return coeffs_; }
  const cdouble& operator[](std::size_t slot) const { return coeffs_[slot]; }
  cdouble& operator[](std::size_t slot) { return coeffs_[slot]; }
  cdouble at(const Index3& k) const { return coeffs_[grid_.slot_of_frequency(k)]; }

 private:
  TorusGrid grid_{};
  std::vector<cdouble> coeffs_;
};

namespace detail {

// FFTW plans are created once per (n, N, sign) under a lock; execution through
// fftw_execute_dft on fresh arrays is thread safe. FFTW_ESTIMATE keeps the
// chosen algorithm, and therefore the rounding, reproducible run to run.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(const TorusGrid& g, int sign) {
    const auto key = std::make_tuple(g.n, g.J, sign);
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cdouble> a(g.size()), b(g.size());
    std::array<int, 3> dims{g.N(), g.N(), g.N()};
    fftw_plan plan = fftw_plan_dft(g.n, dims.data(), reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw DataError("FFTW failed to create a plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace detail

inline SpectralField fft(const DiscreteField& u) {
  const TorusGrid& g = u.grid();
  if (u.size() != g.size()) throw DataError("field size does not match its grid");
  SpectralField U(g);
  fftw_plan plan = detail::PlanCache::instance().get(g, FFTW_FORWARD);
  // fftw_execute_dft does not modify the input of an out-of-place plan.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cdouble*>(u.values().data())),
                   reinterpret_cast<fftw_complex*>(U.coefficients().data()));
  const double scale = 1.0 / static_cast<double>(g.size());
  for (auto& c : U.coefficients()) c *= scale;
  return U;
}

inline DiscreteField ifft(const SpectralField& U) {
  const TorusGrid& g = U.grid();
  if (U.size() != g.size()) throw DataError("spectrum size does not match its grid");
  DiscreteField u(g);
  fftw_plan plan = detail::PlanCache::instance().get(g, FFTW_BACKWARD);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<cdouble*>(U.coefficients().data())),
                   reinterpret_cast<fftw_complex*>(u.values().data()));
  return u;
}

// Multiplier sampled on every transform slot.
using MultiplierTable = std::vector<cdouble>;

template <class M>
MultiplierTable tabulate_multiplier(const TorusGrid& g, M&& m) {
  MultiplierTable table(g.size());
  for (std::size_t s = 0; s < table.size(); ++s) {
    table[s] = cdouble(m(g.frequency(s)));
    if (!std::isfinite(table[s].real()) || !std::isfinite(table[s].imag()))
      throw DataError("multiplier is not finite at some grid frequency");
  }
  return table;
}

inline SpectralField multiply(SpectralField U, std::span<const cdouble> table) {
  if (table.size() != U.size()) throw DataError("multiplier table does not match grid");
  for (std::size_t s = 0; s < U.size(); ++s) U[s] *= table[s];
  return U;
}

inline DiscreteField apply_multiplier(const DiscreteField& u, std::span<const cdouble> table) {
  return ifft(multiply(fft(u), table));
}

template <class M>
  requires std::invocable<M, const Index3&>
DiscreteField apply_multiplier(const DiscreteField& u, M&& m) {
  const MultiplierTable table = tabulate_multiplier(u.grid(), std::forward<M>(m));
  return apply_multiplier(u, std::span<const cdouble>(table));
}

// (h^n sum |u|^p)^{1/p}: the L^p norm of the torus with unit measure.
inline double lp_norm(const DiscreteField& u, double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw RangeError("lp_norm requires finite p > 1");
  if (!u.all_finite()) throw DataError("lp_norm: field has non-finite values");
  double scale = 0.0;
  for (const auto& v : u.values()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& v : u.values()) s += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(s * u.grid().cell_volume(), 1.0 / p);
}

inline double l2_norm(const DiscreteField& u) {
  double s = 0.0;
  for (const auto& v : u.values()) s += std::norm(v);
  return std::sqrt(s * u.grid().cell_volume());
}

// Unweighted l^2 norm over frequencies; equals l2_norm of the field (Parseval).
inline double l2_norm(const SpectralField& U) {
  double s = 0.0;
  for (const auto& c : U.coefficients()) s += std::norm(c);
  return std::sqrt(s);
}

// <u, v> = h^n sum u conj(v).
inline cdouble inner(const DiscreteField& u, const DiscreteField& v) {
  u.require_same_grid(v);
  cdouble s{};
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * std::conj(v[i]);
  return s * u.grid().cell_volume();
}

inline cdouble mean(const DiscreteField& u) {
  cdouble s{};
  for (const auto& v : u.values()) s += v;
  return s / static_cast<double>(u.size());
}

inline DiscreteField remove_mean(DiscreteField u) {
  const cdouble m = mean(u);
  for (auto& v : u.values()) v -= m;
  return u;
}

inline double relative_l2_error(const DiscreteField& got, const DiscreteField& want) {
  const double ref = l2_norm(want);
  const double diff = l2_norm(got - want);
  return ref > 0.0 ? diff / ref : diff;
}

inline double max_abs_diff(const DiscreteField& a, const DiscreteField& b) {
  a.require_same_grid(b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const DiscreteField& a) {
  double m = 0.0;
  for (const auto& v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_imag(const DiscreteField& a) {
  double m = 0.0;
  for (const auto& v : a.values()) m = std::max(m, std::abs(v.imag()));
  return m;
}

}  // namespace rwl
