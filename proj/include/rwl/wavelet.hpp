#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rwl/dwt.hpp"
#include "rwl/dyadic.hpp"
#include "rwl/error.hpp"
#include "rwl/grid.hpp"

namespace rwl {

struct ScaleRange {
  int lo = 0;
  int hi = -1;

  bool contains(int j) const { return j >= lo && j <= hi; }
  bool empty() const { return hi < lo; }
  int count() const { return empty() ? 0 : hi - lo + 1; }
};

// Default active window [2, J-3]; keeps clear of the coarsest and finest
// levels where periodization and the finite filter dominate.
inline ScaleRange default_active_scales(const TorusGrid& g) { return ScaleRange{2, g.J - 3}; }

// Constants of the admissibility conditions: decay of order delta, Hoelder
// exponent alpha (0 when the system is not Hoelder continuous), and the
// largest measured constant C. `compact` marks compactly supported systems.
struct WaveletCertificate {
  double C = 0.0;
  double delta = 1.0;
  double alpha = 0.0;
  bool compact = true;
};

// Periodized tensor-product wavelet family phi_Q^(eps) on the torus, scaled so
// that phi_Q / sqrt|Q| is orthonormal (phi is O(1) in sup norm, like the
// L^infty-normalised Haar functions).
class WaveletSystem {
 public:
  WaveletSystem(TorusGrid grid, Filter filter, std::vector<Direction> directions, ScaleRange active)
      : dwt_(grid, std::move(filter)), directions_(std::move(directions)), active_(active) {
    certificate_.alpha = dwt_.filter().alpha_default;
  }

  const TorusGrid& grid() const { return dwt_.grid(); }
  const Filter& filter() const { return dwt_.filter(); }
  const PeriodicDwt& dwt() const { return dwt_; }
  const std::vector<Direction>& directions() const { return directions_; }
  ScaleRange active_scales() const { return active_; }
  const WaveletCertificate& certificate() const { return certificate_; }
  void set_certificate(const WaveletCertificate& c) { certificate_ = c; }

  std::vector<cdouble> analyze(const DiscreteField& u, int j_stop = 0) const {
    if (!(u.grid() == grid())) throw DataError("field grid does not match wavelet system");
    std::vector<cdouble> c(u.values().begin(), u.values().end());
    dwt_.forward(c, j_stop);
    return c;
  }

  DiscreteField synthesize(std::vector<cdouble> coeffs, int j_stop = 0) const {
    dwt_.inverse(coeffs, j_stop);
    return DiscreteField(grid(), std::move(coeffs));
  }

  // Orthonormal coefficient c of e_Q relates to <u, phi_Q>/|Q| by this factor.
  // sqrt(h^n / |Q|) = 2^{-n(J-j)/2}.
  double atom_factor(int j) const { return std::sqrt(std::ldexp(1.0, -grid().n * (grid().J - j))); }

  void require_resolvable(const DyadicCube& q) const {
    if (q.n != grid().n) throw RangeError("cube dimension does not match grid");
    if (q.j < 0 || q.j > grid().J - 1) throw RangeError("cube finer than the grid resolves");
  }

  DiscreteField atom(const DyadicCube& q, const Direction& eps) const {
    require_resolvable(q);
    std::vector<cdouble> c(grid().size(), cdouble{});
    c[dwt_.slot(q.j, eps, q)] = 1.0 / atom_factor(q.j);
    return synthesize(std::move(c));
  }

  // <u, phi_Q> / |Q| read off an analysis computed with j_stop <= q.j.
  cdouble coefficient(const std::vector<cdouble>& analysis, const DyadicCube& q, const Direction& eps) const {
    return analysis[dwt_.slot(q.j, eps, q)] * atom_factor(q.j);
  }

  // Copies the (j, eps) detail block of `from` into `to`.
  void copy_block(const std::vector<cdouble>& from, std::vector<cdouble>& to, int j, const Direction& eps) const {
    const std::size_t count = std::size_t{1} << (grid().n * j);
    for (std::size_t f = 0; f < count; ++f) {
      const std::size_t s = dwt_.slot(j, eps, cube_from_flat(grid().n, j, f));
      to[s] = from[s];
    }
  }

  // Orthogonal projection onto span{phi_Q^(eps) : s(Q) = 2^-j, j in scales}.
  DiscreteField project(const DiscreteField& u, const Direction& eps, ScaleRange scales) const {
    if (scales.empty()) return DiscreteField(grid());
    if (scales.lo < 0 || scales.hi > grid().J - 1) throw RangeError("projection scales outside the grid");
    const auto a = analyze(u, scales.lo);
    std::vector<cdouble> kept(a.size(), cdouble{});
    for (int j = scales.lo; j <= scales.hi; ++j) copy_block(a, kept, j, eps);
    return synthesize(std::move(kept), scales.lo);
  }

 private:
  PeriodicDwt dwt_;
  std::vector<Direction> directions_;
  ScaleRange active_;
  WaveletCertificate certificate_;
};

// W^(eps) over the system's active scales.
inline DiscreteField wavelet_projection(const DiscreteField& u, const WaveletSystem& sys, const Direction& eps) {
  return sys.project(u, eps, sys.active_scales());
}

}  // namespace rwl
