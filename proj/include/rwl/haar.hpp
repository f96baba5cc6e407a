#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rwl/admissibility.hpp"
#include "rwl/dyadic.hpp"
#include "rwl/error.hpp"
#include "rwl/grid.hpp"
#include "rwl/operator.hpp"
#include "rwl/rng.hpp"
#include "rwl/wavelet.hpp"

namespace rwl {

// L^infty-normalised Haar function: on Q, the product over axes of +1 on the
// left half / -1 on the right half (eps_a = 1) or 1 (eps_a = 0); zero off Q.
inline DiscreteField haar_function(const DyadicCube& q, const Direction& eps, const TorusGrid& g) {
  if (q.n != g.n || eps.n != g.n) throw RangeError("cube or direction dimension does not match grid");
  if (q.j > g.J - 1) throw RangeError("Haar function needs s(Q) >= 2h");
  const int side = g.N() >> q.j;
  DiscreteField out(g);
  for (std::size_t f = 0; f < out.size(); ++f) {
    const Index3 idx = g.unflatten(f);
    double v = 1.0;
    for (int a = 0; a < g.n; ++a) {
      const int local = idx[a] - q.index[a] * side;
      if (local < 0 || local >= side) {
        v = 0.0;
        break;
      }
      if (eps[a]) v *= (local < side / 2) ? 1.0 : -1.0;
    }
    out[f] = v;
  }
  return out;
}

// Haar coefficients a_Q^(eps) = <u, h_Q^(eps)> / |Q| for 0 <= j <= J-1 plus the
// mean, stored in the Mallat layout of PeriodicDwt (position eps_a 2^j + k_a).
class HaarCoefficients {
 public:
  HaarCoefficients() = default;
  HaarCoefficients(TorusGrid grid, std::vector<cdouble> data) : grid_(grid), data_(std::move(data)) {
    if (data_.size() != grid_.size()) throw DataError("Haar coefficient array does not match grid");
  }

  const TorusGrid& grid() const { return grid_; }
  cdouble mean() const { return data_[0]; }
  cdouble& mean() { return data_[0]; }
  std::size_t slot(const DyadicCube& q, const Direction& eps) const {
    if (q.j < 0 || q.j > grid_.J - 1) throw RangeError("Haar coefficient scale outside [0, J-1]");
    Index3 p{0, 0, 0};
    for (int a = 0; a < grid_.n; ++a) p[a] = eps.eps[a] * (1 << q.j) + q.index[a];
    return grid_.flatten(p);
  }
  cdouble at(const DyadicCube& q, const Direction& eps) const { return data_[slot(q, eps)]; }
  cdouble& at(const DyadicCube& q, const Direction& eps) { return data_[slot(q, eps)]; }
  std::span<const cdouble> raw() const { return data_; }
  std::span<cdouble> raw() { return data_; }

 private:
  TorusGrid grid_{};
  std::vector<cdouble> data_;
};

namespace detail {

// In-place average/difference along every axis of the block [0, 2M)^n:
// (a, b) -> ((a + b)/2, (a - b)/2), or its inverse.
inline void haar_level(const TorusGrid& g, std::vector<cdouble>& d, int M2, bool inverse) {
  const auto N = static_cast<std::size_t>(g.N());
  const int half = M2 / 2;
  std::vector<cdouble> line(static_cast<std::size_t>(M2)), out(static_cast<std::size_t>(M2));
  for (int step = 0; step < g.n; ++step) {
    const int axis = inverse ? g.n - 1 - step : step;
    std::size_t stride = 1;
    for (int a = g.n - 1; a > axis; --a) stride *= N;
    std::size_t count = 1;
    for (int t = 0; t < g.n - 1; ++t) count *= static_cast<std::size_t>(M2);
    for (std::size_t c = 0; c < count; ++c) {
      Index3 idx{0, 0, 0};
      std::size_t rem = c;
      for (int a = g.n - 1; a >= 0; --a) {
        if (a == axis) continue;
        idx[a] = static_cast<int>(rem % static_cast<std::size_t>(M2));
        rem /= static_cast<std::size_t>(M2);
      }
      const std::size_t base = g.flatten(idx);
      for (int t = 0; t < M2; ++t) line[t] = d[base + static_cast<std::size_t>(t) * stride];
      for (int k = 0; k < half; ++k) {
        if (!inverse) {
          out[k] = 0.5 * (line[2 * k] + line[2 * k + 1]);
          out[half + k] = 0.5 * (line[2 * k] - line[2 * k + 1]);
        } else {
          out[2 * k] = line[k] + line[half + k];
          out[2 * k + 1] = line[k] - line[half + k];
        }
      }
      for (int t = 0; t < M2; ++t) d[base + static_cast<std::size_t>(t) * stride] = out[t];
    }
  }
}

}  // namespace detail

inline HaarCoefficients haar_analyze(const DiscreteField& u) {
  const TorusGrid& g = u.grid();
  std::vector<cdouble> d(u.values().begin(), u.values().end());
  for (int j = g.J - 1; j >= 0; --j) detail::haar_level(g, d, 2 << j, false);
  return HaarCoefficients(g, std::move(d));
}

inline DiscreteField haar_synthesize(const HaarCoefficients& c) {
  const TorusGrid& g = c.grid();
  std::vector<cdouble> d(c.raw().begin(), c.raw().end());
  for (int j = 0; j <= g.J - 1; ++j) detail::haar_level(g, d, 2 << j, true);
  return DiscreteField(g, std::move(d));
}

inline ScaleRange full_haar_scales(const TorusGrid& g) { return ScaleRange{0, g.J - 1}; }

// P^(eps): keeps the (Q, eps) coefficients with j in `scales`.
inline DiscreteField haar_projection(const DiscreteField& u, const Direction& eps, ScaleRange scales) {
  const TorusGrid& g = u.grid();
  if (!scales.empty() && (scales.lo < 0 || scales.hi > g.J - 1)) throw RangeError("Haar scales outside [0, J-1]");
  const HaarCoefficients a = haar_analyze(u);
  HaarCoefficients kept(g, std::vector<cdouble>(g.size(), cdouble{}));
  for (int j = scales.lo; j <= scales.hi; ++j)
    for (const auto& q : cubes_at_scale(g, j)) kept.at(q, eps) = a.at(q, eps);
  return haar_synthesize(kept);
}

// (sum_{eps,Q} |a_Q^(eps)|^2 1_Q)^{1/2}
inline DiscreteField square_function(const DiscreteField& u) {
  const TorusGrid& g = u.grid();
  const HaarCoefficients a = haar_analyze(u);
  std::vector<double> acc(g.size(), 0.0);
  const auto dirs = all_directions(g.n);
  for (int j = 0; j <= g.J - 1; ++j) {
    const int side = g.N() >> j;
    for (const auto& q : cubes_at_scale(g, j)) {
      double w = 0.0;
      for (const auto& e : dirs) w += std::norm(a.at(q, e));
      if (w == 0.0) continue;
      // add w on every grid point of Q
      std::size_t cnt = 1;
      for (int t = 0; t < g.n; ++t) cnt *= static_cast<std::size_t>(side);
      for (std::size_t c = 0; c < cnt; ++c) {
        Index3 idx{0, 0, 0};
        std::size_t rem = c;
        for (int ax = g.n - 1; ax >= 0; --ax) {
          idx[ax] = q.index[ax] * side + static_cast<int>(rem % static_cast<std::size_t>(side));
          rem /= static_cast<std::size_t>(side);
        }
        acc[g.flatten(idx)] += w;
      }
    }
  }
  DiscreteField out(g);
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = std::sqrt(acc[f]);
  return out;
}

// T_mu: h_Q^(eps) -> h_{Q + mu s(Q)}^(eps) on every scale; the mean is kept.
// With a direction only that family moves, the others stay in place.
inline DiscreteField semenov_rearrange(const DiscreteField& u, const Index3& mu,
                                       const std::optional<Direction>& eps = std::nullopt) {
  const TorusGrid& g = u.grid();
  const HaarCoefficients a = haar_analyze(u);
  HaarCoefficients b = a;
  const auto dirs = eps ? std::vector<Direction>{*eps} : all_directions(g.n);
  for (const auto& e : dirs)
    for (int j = 0; j <= g.J - 1; ++j)
      for (const auto& q : cubes_at_scale(g, j)) b.at(translate(q, mu), e) = a.at(q, e);
  return haar_synthesize(b);
}

inline LinearOperatorHandle semenov_operator(const TorusGrid& g, const Index3& mu,
                                             const std::optional<Direction>& eps = std::nullopt) {
  LinearOperatorHandle op;
  op.label = "T_mu(" + std::to_string(mu[0]) + (g.n > 1 ? "," + std::to_string(mu[1]) : "") +
             (g.n > 2 ? "," + std::to_string(mu[2]) : "") + ")";
  op.grid = g;
  const Index3 neg{-mu[0], -mu[1], -mu[2]};
  op.apply = [mu, eps](const DiscreteField& u) { return semenov_rearrange(u, mu, eps); };
  op.adjoint = [neg, eps](const DiscreteField& u) { return semenov_rearrange(u, neg, eps); };
  return op;
}

inline LinearOperatorHandle haar_projection_operator(const TorusGrid& g, const Direction& eps, ScaleRange scales) {
  LinearOperatorHandle op;
  op.label = "P^(" + eps.str() + ")";
  op.grid = g;
  op.apply = [eps, scales](const DiscreteField& u) { return haar_projection(u, eps, scales); };
  op.adjoint = op.apply;
  return op;
}

// CSV rows "j,i1..in,epsilon,re,im" for every detail coefficient; the mean is
// written as scale -1 with epsilon 0.
inline void write_haar_csv(std::ostream& os, const HaarCoefficients& c) {
  const TorusGrid& g = c.grid();
  os << "j";
  for (int a = 0; a < g.n; ++a) os << ",i" << (a + 1);
  os << ",epsilon,re,im\n";
  os.precision(17);
  os << -1;
  for (int a = 0; a < g.n; ++a) os << ",0";
  os << "," << std::string(static_cast<std::size_t>(g.n), '0') << "," << c.mean().real() << "," << c.mean().imag()
     << "\n";
  for (int j = 0; j <= g.J - 1; ++j)
    for (const auto& e : all_directions(g.n))
      for (const auto& q : cubes_at_scale(g, j)) {
        const cdouble v = c.at(q, e);
        os << j;
        for (int a = 0; a < g.n; ++a) os << "," << q.index[a];
        os << "," << e.str() << "," << v.real() << "," << v.imag() << "\n";
      }
}

// Block-basis operator S0 u = sum_{Q in S_j} <u, phi_Q> psi~_Q / |Q|, with
// psi~_Q = sum_{K in S_{j+k}} c_K(Q) psi_K built on a second system psi.
using BlockCoefficients = std::function<cdouble(const DyadicCube& K, const DyadicCube& Q)>;

class BlockBasis {
 public:
  BlockBasis(std::shared_ptr<const WaveletSystem> phi, std::shared_ptr<const WaveletSystem> psi, BlockCoefficients c,
             int j, int k, Direction eps, double delta = 1.0, double budget = 1.0)
      : phi_(std::move(phi)), psi_(std::move(psi)), j_(j), k_(k), eps_(eps) {
    const TorusGrid& g = phi_->grid();
    if (!(psi_->grid() == g)) throw DataError("block basis systems live on different grids");
    if (j < 0 || k < 0 || j + k > g.J - 1) throw RangeError("block basis scales outside the grid");
    const auto qs = cubes_at_scale(g, j);
    const auto ks = cubes_at_scale(g, j + k);
    table_.assign(ks.size() * qs.size(), cdouble{});
    for (std::size_t iq = 0; iq < qs.size(); ++iq)
      for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        const cdouble v = c(ks[ik], qs[iq]);
        const double cap = budget * decay_weight(dist(ks[ik], qs[iq]), qs[iq].side(), g.n, delta);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || std::abs(v) > cap * (1.0 + 1e-12))
          throw DomainError("block coefficient c_K(Q) exceeds the decay budget at K=" + format_cube(ks[ik]) +
                            ", Q=" + format_cube(qs[iq]));
        table_[iq * ks.size() + ik] = v;
      }
  }

  DiscreteField apply(const DiscreteField& u) const {
    const TorusGrid& g = phi_->grid();
    const auto a = phi_->analyze(u, j_);
    const auto qs = cubes_at_scale(g, j_);
    const auto ks = cubes_at_scale(g, j_ + k_);
    std::vector<cdouble> out(g.size(), cdouble{});
    for (std::size_t iq = 0; iq < qs.size(); ++iq) {
      const cdouble aq = phi_->coefficient(a, qs[iq], eps_);
      if (aq == cdouble{}) continue;
      for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        const cdouble c = table_[iq * ks.size() + ik];
        if (c == cdouble{}) continue;
        out[psi_->dwt().slot(j_ + k_, eps_, ks[ik])] += aq * c / psi_->atom_factor(j_ + k_);
      }
    }
    return psi_->synthesize(std::move(out));
  }

  // S0^* v = sum_Q (sum_K conj(c_K(Q)) <v, psi_K>) phi_Q / |Q|
  DiscreteField adjoint(const DiscreteField& v) const {
    const TorusGrid& g = phi_->grid();
    const auto b = psi_->analyze(v, j_ + k_);
    const auto qs = cubes_at_scale(g, j_);
    const auto ks = cubes_at_scale(g, j_ + k_);
    std::vector<cdouble> out(g.size(), cdouble{});
    for (std::size_t iq = 0; iq < qs.size(); ++iq) {
      cdouble s{};
      for (std::size_t ik = 0; ik < ks.size(); ++ik) {
        const cdouble c = table_[iq * ks.size() + ik];
        if (c == cdouble{}) continue;
        s += std::conj(c) * psi_->coefficient(b, ks[ik], eps_) * ks[ik].volume();
      }
      out[phi_->dwt().slot(j_, eps_, qs[iq])] += s / (qs[iq].volume() * phi_->atom_factor(j_));
    }
    return phi_->synthesize(std::move(out));
  }

 private:
  std::shared_ptr<const WaveletSystem> phi_, psi_;
  int j_, k_;
  Direction eps_;
  std::vector<cdouble> table_;
};

inline DiscreteField block_basis_apply(const DiscreteField& u, const BlockBasis& s0) { return s0.apply(u); }

inline LinearOperatorHandle block_basis_operator(std::shared_ptr<const BlockBasis> s0, const TorusGrid& g) {
  LinearOperatorHandle op;
  op.label = "S0";
  op.grid = g;
  op.apply = [s0](const DiscreteField& u) { return s0->apply(u); };
  op.adjoint = [s0](const DiscreteField& v) { return s0->adjoint(v); };
  return op;
}

// Kernel family {F_W^(k)} indexed by branch k and cube W, with the constants
// it claims for the structure conditions. An empty `member` is the zero family.
struct KernelFamily {
  std::string kind = "zero";
  std::function<DiscreteField(std::size_t k, const DyadicCube& W)> member;
  double C = 0.0;
  double delta = 1.0;
  double alpha = 0.0;
  // Fast path: when set, <g, F_W^(k)> is read off a precomputed analysis of g.
  std::shared_ptr<const WaveletSystem> wavelets;
  Direction eps;

  bool zero() const { return !member; }

  static KernelFamily zero_family() { return KernelFamily{}; }

  // F_W^(k) = phi_W^(eps), independent of k.
  static KernelFamily from_wavelets(std::shared_ptr<const WaveletSystem> sys, const Direction& eps) {
    KernelFamily f;
    f.kind = "wavelets(" + sys->filter().name + ")";
    f.C = sys->certificate().C;
    f.delta = sys->certificate().delta;
    f.alpha = sys->certificate().alpha;
    f.wavelets = sys;
    f.eps = eps;
    f.member = [sys, eps](std::size_t, const DyadicCube& w) { return sys->atom(w, eps); };
    return f;
  }
};

struct KernelFamilyCheck {
  bool pass = true;
  double worst_mean = 0.0;
  double worst_decay = 0.0;   // measured / C
  double worst_holder = 0.0;  // measured / C
  std::string note;
};

// Samples members at random cubes of scales in [lo, hi]: mean <= 1e-9, decay
// and Hoelder quotients within twice the claimed constant, at most 10^4 points
// per member.
inline KernelFamilyCheck validate_kernel_family(const KernelFamily& f, const TorusGrid& g, int lambda, ScaleRange scales,
                                                std::uint64_t seed = 1, int members = 6) {
  KernelFamilyCheck r;
  if (f.zero()) return r;
  if (!(f.C > 0.0)) {
    r.pass = false;
    r.note = "certificate constant must be positive";
    return r;
  }
  Rng rng(seed);
  const std::size_t branches = std::size_t{1} << (g.n * lambda);
  for (int t = 0; t < members && !scales.empty(); ++t) {
    const int j = scales.lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(scales.count())));
    Index3 idx{0, 0, 0};
    for (int a = 0; a < g.n; ++a) idx[a] = static_cast<int>(rng.below(std::uint64_t{1} << j));
    const DyadicCube w = make_cube(g.n, j, idx);
    const DiscreteField F = f.member(static_cast<std::size_t>(rng.below(branches)), w);
    const double scale = std::max(1.0, max_abs(F));
    r.worst_mean = std::max(r.worst_mean, std::abs(mean(F)) / scale);
    const auto pts = sampling::sample_points(g, w, rng, 10000);
    r.worst_decay = std::max(r.worst_decay, sampling::decay_ratio(F, w, f.delta, pts) / f.C);
    if (f.alpha > 0.0) {
      const auto npts = sampling::neighbourhood_points(g, w, rng, 10000);
      const auto hm = sampling::holder_modulus(F, w, f.delta, npts);
      r.worst_holder = std::max(r.worst_holder, sampling::holder_quotient(hm.weighted, f.alpha) / f.C);
    }
  }
  if (r.worst_mean > 1e-9) {
    r.pass = false;
    r.note = "member mean exceeds 1e-9";
  } else if (r.worst_decay > 2.0) {
    r.pass = false;
    r.note = "decay exceeds twice the certificate";
  } else if (r.worst_holder > 2.0) {
    r.pass = false;
    r.note = "Hoelder quotient exceeds twice the certificate";
  }
  return r;
}

// S g = sum_k sum_{Q in branch k} <g, F_{tau(Q)}^(k)> phi_Q^(eps) / |Q| over
// the cubes Q of the active scales at least lambda; tau is the lambda-th
// predecessor and k(Q) the canonical branch.
class PredecessorRearrangement {
 public:
  PredecessorRearrangement(std::shared_ptr<const WaveletSystem> sys, int lambda, KernelFamily family,
                           const Direction& eps, bool validate = true)
      : sys_(std::move(sys)), lambda_(lambda), family_(std::move(family)), eps_(eps) {
    if (lambda < 0) throw RangeError("negative predecessor depth");
    const ScaleRange act = sys_->active_scales();
    scales_ = ScaleRange{std::max(act.lo, lambda), act.hi};
    if (validate) {
      const auto check =
          validate_kernel_family(family_, sys_->grid(), lambda, ScaleRange{scales_.lo - lambda, scales_.hi - lambda});
      if (!check.pass) throw DomainError("kernel family certificate invalid: " + check.note);
    }
  }

  ScaleRange scales() const { return scales_; }

  DiscreteField apply(const DiscreteField& g) const {
    const TorusGrid& grid = sys_->grid();
    std::vector<cdouble> out(grid.size(), cdouble{});
    if (family_.zero() || scales_.empty()) return DiscreteField(grid);
    const SplitFamily split = canonical_split(grid.n, lambda_);
    std::vector<cdouble> analysis;
    if (fast()) analysis = family_.wavelets->analyze(g, std::max(0, scales_.lo - lambda_));
    std::map<std::pair<std::size_t, DyadicCube>, cdouble> cache;
    for (int j = scales_.lo; j <= scales_.hi; ++j)
      for (const auto& q : cubes_at_scale(grid, j)) {
        const std::size_t k = split.branch_of(q);
        const DyadicCube w = predecessor(q, lambda_);
        const auto key = std::make_pair(fast() ? 0 : k, w);
        auto it = cache.find(key);
        if (it == cache.end()) {
          const cdouble v = fast() ? family_.wavelets->coefficient(analysis, w, family_.eps) * w.volume()
                                   : inner(g, family_.member(k, w));
          it = cache.emplace(key, v).first;
        }
        out[sys_->dwt().slot(j, eps_, q)] += it->second / (q.volume() * sys_->atom_factor(j));
      }
    return sys_->synthesize(std::move(out));
  }

  // S^* h = sum_Q <h, phi_Q> F_{tau(Q)}^(k(Q)) / |Q|
  DiscreteField adjoint(const DiscreteField& h) const {
    const TorusGrid& grid = sys_->grid();
    if (family_.zero() || scales_.empty()) return DiscreteField(grid);
    const SplitFamily split = canonical_split(grid.n, lambda_);
    const auto a = sys_->analyze(h, scales_.lo);
    std::map<std::pair<std::size_t, DyadicCube>, cdouble> weights;
    for (int j = scales_.lo; j <= scales_.hi; ++j)
      for (const auto& q : cubes_at_scale(grid, j)) {
        const cdouble hq = sys_->coefficient(a, q, eps_);  // <h, phi_Q> / |Q|
        const std::size_t k = fast() ? 0 : split.branch_of(q);
        weights[{k, predecessor(q, lambda_)}] += hq;
      }
    if (fast()) {
      const WaveletSystem& fw = *family_.wavelets;
      std::vector<cdouble> c(grid.size(), cdouble{});
      for (const auto& [key, wt] : weights) c[fw.dwt().slot(key.second.j, family_.eps, key.second)] += wt / fw.atom_factor(key.second.j);
      return fw.synthesize(std::move(c));
    }
    DiscreteField out(grid);
    for (const auto& [key, wt] : weights) out += wt * family_.member(key.first, key.second);
    return out;
  }

 private:
  bool fast() const { return static_cast<bool>(family_.wavelets); }

  std::shared_ptr<const WaveletSystem> sys_;
  int lambda_;
  KernelFamily family_;
  Direction eps_;
  ScaleRange scales_;
};

inline DiscreteField predecessor_rearrange(const DiscreteField& u, const PredecessorRearrangement& s) { return s.apply(u); }

inline LinearOperatorHandle predecessor_operator(std::shared_ptr<const PredecessorRearrangement> s, const TorusGrid& g,
                                                 int lambda) {
  LinearOperatorHandle op;
  op.label = "S_lambda=" + std::to_string(lambda);
  op.grid = g;
  op.apply = [s](const DiscreteField& u) { return s->apply(u); };
  op.adjoint = [s](const DiscreteField& v) { return s->adjoint(v); };
  return op;
}

}  // namespace rwl
