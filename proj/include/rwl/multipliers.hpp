#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rwl/error.hpp"
#include "rwl/grid.hpp"
#include "rwl/operator.hpp"

namespace rwl {

namespace detail {

inline void require_axis(const TorusGrid& g, int axis) {
  if (axis < 0 || axis >= g.n)
    throw RangeError("axis " + std::to_string(axis) + " out of range for n=" + std::to_string(g.n));
}

inline constexpr cdouble kI{0.0, 1.0};

}  // namespace detail

// Riesz transform: multiplier -i k_axis / |k|, zero at k = 0.
inline MultiplierTable riesz_table(const TorusGrid& g, int axis) {
  detail::require_axis(g, axis);
  return tabulate_multiplier(g, [&](const Index3& k) -> cdouble {
    const double r = frequency_norm(k, g.n);
    return r == 0.0 ? cdouble{} : -detail::kI * (k[axis] / r);
  });
}

// Inverse Riesz transform on the subspace without mass on k_axis = 0:
// multiplier i |k| / k_axis, zero on the hyperplane.
inline MultiplierTable riesz_inverse_table(const TorusGrid& g, int axis) {
  detail::require_axis(g, axis);
  return tabulate_multiplier(g, [&](const Index3& k) -> cdouble {
    if (k[axis] == 0) return {};
    return detail::kI * (frequency_norm(k, g.n) / k[axis]);
  });
}

inline MultiplierTable derivative_table(const TorusGrid& g, int axis) {
  detail::require_axis(g, axis);
  return tabulate_multiplier(g, [&](const Index3& k) -> cdouble {
    return 2.0 * std::numbers::pi * detail::kI * static_cast<double>(k[axis]);
  });
}

// Periodic antiderivative in x_axis: 1 / (2 pi i k_axis), zero where k_axis = 0.
inline MultiplierTable sectional_integral_table(const TorusGrid& g, int axis) {
  detail::require_axis(g, axis);
  return tabulate_multiplier(g, [&](const Index3& k) -> cdouble {
    if (k[axis] == 0) return {};
    return 1.0 / (2.0 * std::numbers::pi * detail::kI * static_cast<double>(k[axis]));
  });
}

// Orthogonal projector removing every mode on the hyperplane k_axis = 0.
inline MultiplierTable off_hyperplane_table(const TorusGrid& g, int axis) {
  detail::require_axis(g, axis);
  return tabulate_multiplier(g, [&](const Index3& k) { return k[axis] == 0 ? 0.0 : 1.0; });
}

// Relative l^2 mass of the spectrum on the hyperplane k_axis = 0.
inline double hyperplane_mass(const SpectralField& U, int axis) {
  const TorusGrid& g = U.grid();
  double on = 0.0, total = 0.0;
  for (std::size_t s = 0; s < U.size(); ++s) {
    const double w = std::norm(U[s]);
    total += w;
    if (g.frequency(s)[axis] == 0) on += w;
  }
  return total > 0.0 ? std::sqrt(on / total) : 0.0;
}

inline DiscreteField riesz(const DiscreteField& u, int axis) {
  const auto t = riesz_table(u.grid(), axis);
  return apply_multiplier(u, std::span<const cdouble>(t));
}

inline DiscreteField riesz_inverse(const DiscreteField& u, int axis, double tolerance = 1e-12) {
  detail::require_axis(u.grid(), axis);
  const SpectralField U = fft(u);
  const double mass = hyperplane_mass(U, axis);
  if (mass > tolerance)
    throw DomainError("riesz_inverse: relative spectral mass " + std::to_string(mass) + " on k_" +
                      std::to_string(axis + 1) + " = 0");
  const auto t = riesz_inverse_table(u.grid(), axis);
  return ifft(multiply(U, t));
}

inline DiscreteField partial_derivative(const DiscreteField& u, int axis) {
  const auto t = derivative_table(u.grid(), axis);
  return apply_multiplier(u, std::span<const cdouble>(t));
}

// Largest |mean| over the 1-D sections of u along `axis`.
inline double max_sectional_mean(const DiscreteField& u, int axis) {
  const TorusGrid& g = u.grid();
  const int N = g.N();
  std::size_t stride = 1;
  for (int a = g.n - 1; a > axis; --a) stride *= static_cast<std::size_t>(N);
  double worst = 0.0;
  for (std::size_t base = 0; base < u.size(); ++base) {
    if (g.unflatten(base)[axis] != 0) continue;
    cdouble s{};
    for (int t = 0; t < N; ++t) s += u[base + static_cast<std::size_t>(t) * stride];
    worst = std::max(worst, std::abs(s) / N);
  }
  return worst;
}

inline DiscreteField sectional_integral(const DiscreteField& u, int axis, double tolerance = 1e-10) {
  detail::require_axis(u.grid(), axis);
  const double scale = std::max(1.0, max_abs(u));
  const double m = max_sectional_mean(u, axis);
  if (m > tolerance * scale)
    throw DomainError("sectional_integral: section mean " + std::to_string(m) + " along axis " +
                      std::to_string(axis + 1) + " is not zero");
  const auto t = sectional_integral_table(u.grid(), axis);
  return apply_multiplier(u, std::span<const cdouble>(t));
}

// Smooth partition of unity over dyadic frequency bands. The bump
// exp(-1/(1-s^2)), s = log2|zeta| / halfwidth, is supported in
// |zeta| in [2^-halfwidth, 2^halfwidth] ([1/2, 2] by default). v = w, so
// the band multiplier of Delta_m is b(2^-m |k|)^2 / D(|k|), with the
// dilation-invariant normaliser D(t) = sum_l b(2^l t)^2.
class CalderonPair {
 public:
  explicit CalderonPair(TorusGrid grid, double band_halfwidth = 1.0) : grid_(grid), halfwidth_(band_halfwidth) {
    if (!(halfwidth_ > 0.0 && halfwidth_ <= 1.0)) throw RangeError("band halfwidth must lie in (0, 1]");
    const double kmax = std::sqrt(static_cast<double>(grid.n)) * grid.N() / 2.0;
    // Largest m with 2^-m kmax inside the open support.
    m_max_ = static_cast<int>(std::ceil(std::log2(kmax) + halfwidth_)) - 1;
    m_min_ = 0;
    while (m_max_ > m_min_ && !band_nonempty(m_max_)) --m_max_;
    tables_.resize(static_cast<std::size_t>(m_max_ - m_min_ + 1));
    std::vector<double> norm(grid.size(), 0.0);
    for (std::size_t s = 0; s < grid.size(); ++s) {
      const double r = frequency_norm(grid.frequency(s), grid.n);
      if (r == 0.0) continue;
      const double d = normaliser(r);
      if (d < 1e-14) throw RangeError("Calderon normaliser below 1e-14: profile too narrow");
      norm[s] = d;
    }
    for (int m = m_min_; m <= m_max_; ++m) {
      auto& t = tables_[static_cast<std::size_t>(m - m_min_)];
      t.assign(grid.size(), 0.0);
      for (std::size_t s = 0; s < grid.size(); ++s) {
        if (norm[s] == 0.0) continue;
        const double r = frequency_norm(grid.frequency(s), grid.n);
        const double b = bump(std::ldexp(r, -m));
        t[s] = b * b / norm[s];
      }
    }
  }

  const TorusGrid& grid() const { return grid_; }
  int min_scale() const { return m_min_; }
  int max_scale() const { return m_max_; }
  bool resolvable(int m) const { return m >= m_min_ && m <= m_max_; }

  double bump(double t) const {
    if (t <= 0.0) return 0.0;
    const double s = std::log2(t) / halfwidth_;
    if (std::fabs(s) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
  }

  // sum_l b(2^l t)^2
  double normaliser(double t) const {
    const double base = std::log2(t);
    double d = 0.0;
    const int lo = static_cast<int>(std::floor(-base - halfwidth_)) - 1;
    const int hi = static_cast<int>(std::ceil(-base + halfwidth_)) + 1;
    for (int l = lo; l <= hi; ++l) {
      const double b = bump(std::ldexp(t, l));
      d += b * b;
    }
    return d;
  }

  // v-hat(zeta) = w-hat(zeta) for a frequency vector of length r.
  double v_hat(double r) const {
    if (r == 0.0) return 0.0;
    return bump(r) / std::sqrt(normaliser(r));
  }

  std::span<const double> table(int m) const {
    if (!resolvable(m)) throw RangeError("Littlewood-Paley scale " + std::to_string(m) + " not resolvable");
    return tables_[static_cast<std::size_t>(m - m_min_)];
  }

  SpectralField apply(SpectralField U, int m) const {
    const auto t = table(m);
    for (std::size_t s = 0; s < U.size(); ++s) U[s] *= t[s];
    return U;
  }

 private:
  bool band_nonempty(int m) const {
    for (std::size_t s = 0; s < grid_.size(); ++s) {
      const double r = frequency_norm(grid_.frequency(s), grid_.n);
      if (r > 0.0 && bump(std::ldexp(r, -m)) > 0.0) return true;
    }
    return false;
  }

  TorusGrid grid_;
  double halfwidth_;
  int m_min_ = 0;
  int m_max_ = 0;
  std::vector<std::vector<double>> tables_;
};

inline CalderonPair build_calderon_pair(const TorusGrid& grid, double band_halfwidth = 1.0) {
  return CalderonPair(grid, band_halfwidth);
}

// Delta_m
inline DiscreteField lp_block(const DiscreteField& u, const CalderonPair& pair, int m) {
  u.require_same_grid(DiscreteField(pair.grid()));
  return ifft(pair.apply(fft(u), m));
}

// Operator handles for the multipliers above.

inline LinearOperatorHandle multiplier_operator(std::string label, const TorusGrid& g, MultiplierTable table) {
  LinearOperatorHandle op;
  op.label = std::move(label);
  op.grid = g;
  MultiplierTable conj_table(table.size());
  for (std::size_t s = 0; s < table.size(); ++s) conj_table[s] = std::conj(table[s]);
  op.apply = [t = std::move(table)](const DiscreteField& u) { return apply_multiplier(u, std::span<const cdouble>(t)); };
  op.adjoint = [t = std::move(conj_table)](const DiscreteField& u) {
    return apply_multiplier(u, std::span<const cdouble>(t));
  };
  return op;
}

inline LinearOperatorHandle riesz_operator(const TorusGrid& g, int axis) {
  return multiplier_operator("R_" + std::to_string(axis + 1), g, riesz_table(g, axis));
}

inline LinearOperatorHandle off_hyperplane_projector(const TorusGrid& g, int axis) {
  return multiplier_operator("P[k_" + std::to_string(axis + 1) + "!=0]", g, off_hyperplane_table(g, axis));
}

}  // namespace rwl
