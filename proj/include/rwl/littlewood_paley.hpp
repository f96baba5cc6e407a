#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rwl/dwt.hpp"
#include "rwl/dyadic.hpp"
#include "rwl/error.hpp"
#include "rwl/grid.hpp"
#include "rwl/multipliers.hpp"
#include "rwl/operator.hpp"
#include "rwl/wavelet.hpp"

namespace rwl {

struct KernelField {
  enum class Kind { f, k };
  Kind kind = Kind::f;
  DyadicCube q;
  Direction eps;
  int ell = 0;
  int i = -1;   // derivative axis (k only)
  int i0 = -1;  // integration axis (k only)
  DiscreteField values;
};

// T_l u = sum_j W_j^(eps) Delta_{j+l} u over the active scales j of a wavelet
// system; Delta_m vanishes identically for m outside the pair's resolvable
// range. T_{l,m} inserts the scale-(j+l+m) projection of an auxiliary compact
// system between Delta and u.
class LittlewoodPaley {
 public:
  LittlewoodPaley(std::shared_ptr<const WaveletSystem> sys, std::shared_ptr<const CalderonPair> pair,
                  std::shared_ptr<const WaveletSystem> aux = nullptr)
      : sys_(std::move(sys)), pair_(std::move(pair)), aux_(std::move(aux)) {
    if (!(sys_->grid() == pair_->grid())) throw DataError("wavelet system and Calderon pair live on different grids");
    if (aux_ && !(aux_->grid() == sys_->grid())) throw DataError("auxiliary system lives on a different grid");
  }

  const WaveletSystem& system() const { return *sys_; }
  const CalderonPair& pair() const { return *pair_; }
  const TorusGrid& grid() const { return sys_->grid(); }
  bool has_auxiliary() const { return static_cast<bool>(aux_); }
  const WaveletSystem& auxiliary() const {
    if (!aux_) throw ConfigError("no auxiliary compact wavelet system configured");
    return *aux_;
  }

  // l for which some active scale meets a resolvable band.
  int ell_min() const { return pair_->min_scale() - sys_->active_scales().hi; }
  int ell_max() const { return pair_->max_scale() - sys_->active_scales().lo; }

  void require_ell(int ell) const {
    if (ell < ell_min() || ell > ell_max())
      throw RangeError("shift l=" + std::to_string(ell) + " outside the resolvable range [" + std::to_string(ell_min()) +
                       ", " + std::to_string(ell_max()) + "]");
  }

  // m for which some active scale j has j + l + m inside [0, J-1].
  int m_min(int ell) const { return -ell - sys_->active_scales().hi; }
  int m_max(int ell) const { return grid().J - 1 - ell - sys_->active_scales().lo; }

  DiscreteField t_ell(const DiscreteField& u, int ell, const Direction& eps) const { return t_ell(fft(u), ell, eps); }

  DiscreteField t_ell(const SpectralField& U, int ell, const Direction& eps) const {
    require_ell(ell);
    const ScaleRange act = sys_->active_scales();
    std::vector<cdouble> total(grid().size(), cdouble{});
    for (int j = act.lo; j <= act.hi; ++j) {
      if (!pair_->resolvable(j + ell)) continue;
      const auto c = sys_->analyze(ifft(pair_->apply(U, j + ell)), j);
      sys_->copy_block(c, total, j, eps);
    }
    return sys_->synthesize(std::move(total), act.lo);
  }

  // T_l^* v = sum_j Delta_{j+l} W_j^(eps) v.
  DiscreteField t_ell_adjoint(const DiscreteField& v, int ell, const Direction& eps) const {
    require_ell(ell);
    const ScaleRange act = sys_->active_scales();
    const auto c = sys_->analyze(v, act.lo);
    SpectralField acc(grid());
    for (int j = act.lo; j <= act.hi; ++j) {
      if (!pair_->resolvable(j + ell)) continue;
      std::vector<cdouble> block(grid().size(), cdouble{});
      sys_->copy_block(c, block, j, eps);
      const SpectralField B = pair_->apply(fft(sys_->synthesize(std::move(block), act.lo)), j + ell);
      for (std::size_t s = 0; s < acc.size(); ++s) acc[s] += B[s];
    }
    return ifft(acc);
  }

  // T_l R_i0^{-1} on fields without mass on k_i0 = 0.
  DiscreteField t_ell_riesz_inverse(const DiscreteField& u, int ell, const Direction& eps, int i0) const {
    return t_ell(riesz_inverse(u, i0), ell, eps);
  }

  DiscreteField t_ell_m(const DiscreteField& u, int ell, int m, const Direction& eps) const {
    require_ell(ell);
    if (m < m_min(ell) || m > m_max(ell))
      throw RangeError("slice m=" + std::to_string(m) + " outside [" + std::to_string(m_min(ell)) + ", " +
                       std::to_string(m_max(ell)) + "] for l=" + std::to_string(ell));
    const WaveletSystem& aux = auxiliary();
    const ScaleRange act = sys_->active_scales();
    const auto a = aux.analyze(u, 0);
    std::vector<cdouble> total(grid().size(), cdouble{});
    for (int j = act.lo; j <= act.hi; ++j) {
      const int s = j + ell + m;
      if (!pair_->resolvable(j + ell) || s < 0 || s > grid().J - 1) continue;
      const DiscreteField g = aux_level(a, s);
      const auto c = sys_->analyze(ifft(pair_->apply(fft(g), j + ell)), j);
      sys_->copy_block(c, total, j, eps);
    }
    return sys_->synthesize(std::move(total), act.lo);
  }

  // T_{l,m}^* v = sum_j Q_{j+l+m} Delta_{j+l} W_j^(eps) v.
  DiscreteField t_ell_m_adjoint(const DiscreteField& v, int ell, int m, const Direction& eps) const {
    require_ell(ell);
    const WaveletSystem& aux = auxiliary();
    const ScaleRange act = sys_->active_scales();
    const auto c = sys_->analyze(v, act.lo);
    DiscreteField out(grid());
    for (int j = act.lo; j <= act.hi; ++j) {
      const int s = j + ell + m;
      if (!pair_->resolvable(j + ell) || s < 0 || s > grid().J - 1) continue;
      std::vector<cdouble> block(grid().size(), cdouble{});
      sys_->copy_block(c, block, j, eps);
      const DiscreteField w = ifft(pair_->apply(fft(sys_->synthesize(std::move(block), act.lo)), j + ell));
      out += aux_level(aux.analyze(w, 0), s);
    }
    return out;
  }

  // f_{Q,l} = Delta_{j+l} phi_Q.
  KernelField kernel_f(const DyadicCube& q, int ell, const Direction& eps) const {
    const int m = q.j + ell;
    if (!pair_->resolvable(m))
      throw RangeError("kernel scale j+l=" + std::to_string(m) + " outside the resolvable band range");
    KernelField kf;
    kf.kind = KernelField::Kind::f;
    kf.q = q;
    kf.eps = eps;
    kf.ell = ell;
    kf.values = ifft(pair_->apply(fft(sys_->atom(q, eps)), m));
    return kf;
  }

  // k_Q^(l,i) = Delta_{j+l} E_i0 d_i phi_Q.
  KernelField kernel_k(const DyadicCube& q, int ell, const Direction& eps, int i, int i0) const {
    detail::require_axis(grid(), i);
    detail::require_axis(grid(), i0);
    if (i == i0) throw RangeError("kernel_k needs a derivative axis different from the integration axis");
    if (!eps[i0]) throw RangeError("integration axis must carry a wavelet factor");
    const int m = q.j + ell;
    if (!pair_->resolvable(m))
      throw RangeError("kernel scale j+l=" + std::to_string(m) + " outside the resolvable band range");
    KernelField kk;
    kk.kind = KernelField::Kind::k;
    kk.q = q;
    kk.eps = eps;
    kk.ell = ell;
    kk.i = i;
    kk.i0 = i0;
    const DiscreteField e = sectional_integral(partial_derivative(sys_->atom(q, eps), i), i0);
    kk.values = ifft(pair_->apply(fft(e), m));
    return kk;
  }

 private:
  // Sum of the level-s detail blocks of a full auxiliary analysis, all directions.
  DiscreteField aux_level(const std::vector<cdouble>& a, int s) const {
    std::vector<cdouble> level(grid().size(), cdouble{});
    for (const Direction& d : all_directions(grid().n)) aux_->copy_block(a, level, s, d);
    return aux_->synthesize(std::move(level), s);
  }

  std::shared_ptr<const WaveletSystem> sys_;
  std::shared_ptr<const CalderonPair> pair_;
  std::shared_ptr<const WaveletSystem> aux_;
};

// Auxiliary compact system: the shortest smooth filter, every direction, all scales.
inline std::shared_ptr<const WaveletSystem> make_auxiliary_system(const TorusGrid& grid,
                                                                  const FilterTable& table = FilterTable::builtin()) {
  return std::make_shared<const WaveletSystem>(grid, table.shortest_smooth(), all_directions(grid.n),
                                               ScaleRange{0, grid.J - 1});
}

// Representation of T_l R_i0^{-1} through kernels: since
// R_i0^{-1} = -R_i0 - sum_{i != i0} E_i0 d_i R_i,
//   T_l R_i0^{-1} u = -( T_l R_i0 u + sum_{i != i0} sum_Q <R_i u, k_Q^(l,i)> phi_Q / |Q| ).
// Kernels of one scale are circular shifts of the kernel of the cube at the
// origin, so one explicit kernel per (scale, i) serves every cube.
class RieszIdentity {
 public:
  RieszIdentity(const LittlewoodPaley& lp, int ell, const Direction& eps) : lp_(&lp), ell_(ell), eps_(eps) {
    if (!eps.i0) throw RangeError("Riesz identity needs a direction with a distinguished axis i0");
    lp.require_ell(ell);
    const TorusGrid& g = lp.grid();
    const ScaleRange act = lp.system().active_scales();
    for (int j = act.lo; j <= act.hi; ++j) {
      if (!lp.pair().resolvable(j + ell)) continue;
      for (int i = 0; i < g.n; ++i) {
        if (i == *eps.i0) continue;
        kernels_.push_back({j, i, lp.kernel_k(make_cube(g.n, j, {0, 0, 0}), ell, eps, i, *eps.i0).values});
      }
    }
  }

  DiscreteField lhs(const DiscreteField& u) const {
    return lp_->t_ell(riesz_inverse(u, *eps_.i0), ell_, eps_);
  }

  DiscreteField rhs(const DiscreteField& u) const {
    const TorusGrid& g = lp_->grid();
    const WaveletSystem& sys = lp_->system();
    const int i0 = *eps_.i0;
    DiscreteField out = lp_->t_ell(riesz(u, i0), ell_, eps_);
    std::vector<cdouble> coeffs(g.size(), cdouble{});
    for (const auto& kern : kernels_) {
      const DiscreteField Ri = riesz(u, kern.i);
      const int step = g.N() >> kern.j;
      const std::size_t count = std::size_t{1} << (g.n * kern.j);
      for (std::size_t f = 0; f < count; ++f) {
        const DyadicCube q = cube_from_flat(g.n, kern.j, f);
        const cdouble a = shifted_inner(Ri, kern.values, q, step);
        // <., k_Q> phi_Q / |Q| with phi_Q = e_Q / atom_factor.
        coeffs[sys.dwt().slot(kern.j, eps_, q)] += a / (q.volume() * sys.atom_factor(kern.j));
      }
    }
    out += sys.synthesize(std::move(coeffs));
    return cdouble(-1.0) * out;
  }

  double residual(const DiscreteField& u) const { return relative_l2_error(rhs(u), lhs(u)); }

 private:
  struct ScaleKernel {
    int j;
    int i;
    DiscreteField values;
  };

  // <v, k(. - tau)> with tau = index(Q) * step mesh points.
  static cdouble shifted_inner(const DiscreteField& v, const DiscreteField& k0, const DyadicCube& q, int step) {
    const TorusGrid& g = v.grid();
    const int N = g.N();
    cdouble s{};
    for (std::size_t x = 0; x < v.size(); ++x) {
      Index3 idx = g.unflatten(x);
      for (int a = 0; a < g.n; ++a) idx[a] = ((idx[a] - q.index[a] * step) % N + N) % N;
      s += v[x] * std::conj(k0[g.flatten(idx)]);
    }
    return s * g.cell_volume();
  }

  const LittlewoodPaley* lp_;
  int ell_;
  Direction eps_;
  std::vector<ScaleKernel> kernels_;
};

inline double riesz_identity_check(const LittlewoodPaley& lp, const DiscreteField& u, int ell, const Direction& eps) {
  return RieszIdentity(lp, ell, eps).residual(u);
}

// Operator handles.

inline LinearOperatorHandle wavelet_projection_operator(std::shared_ptr<const WaveletSystem> sys, const Direction& eps) {
  LinearOperatorHandle op;
  op.label = "W^(" + eps.str() + ")";
  op.grid = sys->grid();
  op.apply = [sys, eps](const DiscreteField& u) { return wavelet_projection(u, *sys, eps); };
  op.adjoint = op.apply;
  return op;
}

inline LinearOperatorHandle t_ell_operator(std::shared_ptr<const LittlewoodPaley> lp, int ell, const Direction& eps) {
  lp->require_ell(ell);
  LinearOperatorHandle op;
  op.label = "T_" + std::to_string(ell) + "^(" + eps.str() + ")";
  op.grid = lp->grid();
  op.apply = [lp, ell, eps](const DiscreteField& u) { return lp->t_ell(u, ell, eps); };
  op.adjoint = [lp, ell, eps](const DiscreteField& v) { return lp->t_ell_adjoint(v, ell, eps); };
  return op;
}

// T_l R_i0^{-1} composed with the projector onto fields without k_i0 = 0 mass.
inline LinearOperatorHandle t_ell_riesz_inverse_operator(std::shared_ptr<const LittlewoodPaley> lp, int ell,
                                                         const Direction& eps, int i0) {
  lp->require_ell(ell);
  const TorusGrid g = lp->grid();
  auto inv = std::make_shared<MultiplierTable>(riesz_inverse_table(g, i0));
  auto inv_adj = std::make_shared<MultiplierTable>(inv->size());
  for (std::size_t s = 0; s < inv->size(); ++s) (*inv_adj)[s] = std::conj((*inv)[s]);
  auto proj = std::make_shared<MultiplierTable>(off_hyperplane_table(g, i0));
  LinearOperatorHandle op;
  op.label = "T_" + std::to_string(ell) + "^(" + eps.str() + ") R_" + std::to_string(i0 + 1) + "^-1";
  op.grid = g;
  op.apply = [lp, ell, eps, inv](const DiscreteField& u) {
    return lp->t_ell(multiply(fft(u), std::span<const cdouble>(*inv)), ell, eps);
  };
  op.adjoint = [lp, ell, eps, inv_adj](const DiscreteField& v) {
    return apply_multiplier(lp->t_ell_adjoint(v, ell, eps), std::span<const cdouble>(*inv_adj));
  };
  op.domain = [proj](const DiscreteField& u) { return apply_multiplier(u, std::span<const cdouble>(*proj)); };
  op.domain_description = "no mass on k_" + std::to_string(i0 + 1) + " = 0";
  return op;
}

inline LinearOperatorHandle t_ell_m_operator(std::shared_ptr<const LittlewoodPaley> lp, int ell, int m,
                                             const Direction& eps) {
  LinearOperatorHandle op;
  op.label = "T_{" + std::to_string(ell) + "," + std::to_string(m) + "}^(" + eps.str() + ")";
  op.grid = lp->grid();
  op.apply = [lp, ell, m, eps](const DiscreteField& u) { return lp->t_ell_m(u, ell, m, eps); };
  op.adjoint = [lp, ell, m, eps](const DiscreteField& v) { return lp->t_ell_m_adjoint(v, ell, m, eps); };
  return op;
}

}  // namespace rwl
