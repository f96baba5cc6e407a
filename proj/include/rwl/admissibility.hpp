#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rwl/dwt.hpp"
#include "rwl/dyadic.hpp"
#include "rwl/error.hpp"
#include "rwl/grid.hpp"
#include "rwl/rng.hpp"
#include "rwl/wavelet.hpp"

namespace rwl {

// Pointwise samplers for the decay, Hoelder and sectional conditions of a
// field attached to a cube Q. Distances use the torus metric.
namespace sampling {

inline std::array<double, 3> point_of(const TorusGrid& g, std::size_t flat) {
  const Index3 idx = g.unflatten(flat);
  return {idx[0] * g.h(), idx[1] * g.h(), idx[2] * g.h()};
}

inline double weight_at(const TorusGrid& g, std::size_t flat, const DyadicCube& q, double delta) {
  return decay_weight(dist(point_of(g, flat), q), q.side(), g.n, delta);
}

// Up to `max_points` sample positions: every point when the grid is small,
// otherwise half drawn from the 3x neighbourhood of Q and half from the torus.
inline std::vector<std::size_t> sample_points(const TorusGrid& g, const DyadicCube& q, Rng& rng, std::size_t max_points) {
  std::vector<std::size_t> pts;
  if (g.size() <= max_points) {
    pts.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) pts[i] = i;
    return pts;
  }
  const int span = std::min(g.N(), 3 * (g.N() >> q.j));
  const int start_off = (g.N() >> q.j);
  for (std::size_t t = 0; t < max_points / 2; ++t) {
    Index3 idx{0, 0, 0};
    for (int a = 0; a < g.n; ++a) {
      const int lo = q.index[a] * (g.N() >> q.j) - start_off;
      idx[a] = ((lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(span)))) % g.N() + g.N()) % g.N();
    }
    pts.push_back(g.flatten(idx));
  }
  while (pts.size() < max_points) pts.push_back(static_cast<std::size_t>(rng.below(g.size())));
  return pts;
}

// Points of the 3x neighbourhood of Q, subsampled to at most `max_points`.
inline std::vector<std::size_t> neighbourhood_points(const TorusGrid& g, const DyadicCube& q, Rng& rng,
                                                     std::size_t max_points) {
  const int side = g.N() >> q.j;
  const int span = std::min(g.N(), 3 * side);
  std::size_t total = 1;
  for (int a = 0; a < g.n; ++a) total *= static_cast<std::size_t>(span);
  std::vector<std::size_t> pts;
  auto make = [&](std::size_t c) {
    Index3 idx{0, 0, 0};
    for (int a = g.n - 1; a >= 0; --a) {
      const int off = static_cast<int>(c % static_cast<std::size_t>(span));
      c /= static_cast<std::size_t>(span);
      idx[a] = ((q.index[a] * side - (span == g.N() ? 0 : side) + off) % g.N() + g.N()) % g.N();
    }
    return g.flatten(idx);
  };
  if (total <= max_points) {
    for (std::size_t c = 0; c < total; ++c) pts.push_back(make(c));
  } else {
    for (std::size_t t = 0; t < max_points; ++t) pts.push_back(make(static_cast<std::size_t>(rng.below(total))));
  }
  return pts;
}

inline std::size_t shifted(const TorusGrid& g, std::size_t flat, int axis, int steps) {
  Index3 idx = g.unflatten(flat);
  idx[axis] = ((idx[axis] + steps) % g.N() + g.N()) % g.N();
  return g.flatten(idx);
}

// max |f(x)| / w(x) over the sample.
inline double decay_ratio(const DiscreteField& f, const DyadicCube& q, double delta, const std::vector<std::size_t>& pts) {
  double worst = 0.0;
  for (std::size_t p : pts) worst = std::max(worst, std::abs(f[p]) / weight_at(f.grid(), p, q, delta));
  return worst;
}

// Hoelder modulus by offset class b = 0 .. J - j, |t| = 2^-b s(Q) along each
// axis (the last class is one mesh step). `weighted` divides by the decay
// weight at x; `plain` is the bare modulus of continuity.
struct HolderModulus {
  std::vector<double> weighted;
  std::vector<double> plain;
};

inline HolderModulus holder_modulus(const DiscreteField& f, const DyadicCube& q, double delta,
                                    const std::vector<std::size_t>& pts) {
  const TorusGrid& g = f.grid();
  const auto bins = static_cast<std::size_t>(std::max(g.J - q.j + 1, 0));
  HolderModulus out{std::vector<double>(bins, 0.0), std::vector<double>(bins, 0.0)};
  for (std::size_t p : pts) {
    const double w = weight_at(g, p, q, delta);
    for (std::size_t b = 0; b < bins; ++b) {
      const int steps = (g.N() >> q.j) >> b;
      for (int a = 0; a < g.n; ++a)
        for (int sgn : {-1, 1}) {
          const double d = std::abs(f[p] - f[shifted(g, p, a, sgn * steps)]);
          out.plain[b] = std::max(out.plain[b], d);
          out.weighted[b] = std::max(out.weighted[b], d / w);
        }
    }
  }
  return out;
}

// Antiderivative along `axis` (rectangle rule), started at the section point
// opposite the centre of Q so that it matches the integral from -infinity for
// atoms supported near Q. Requires zero section integrals.
inline DiscreteField running_integral(const DiscreteField& f, int axis, const DyadicCube& q) {
  const TorusGrid& g = f.grid();
  const int N = g.N();
  const int start = (static_cast<int>(std::floor(q.center(axis) * N)) + N / 2) % N;
  DiscreteField out(g);
  for (std::size_t base = 0; base < f.size(); ++base) {
    if (g.unflatten(base)[axis] != 0) continue;
    cdouble acc{};
    for (int t = 0; t < N; ++t) {
      const std::size_t p = shifted(g, base, axis, start + t);
      acc += f[p] * g.h();
      out[p] = acc;
    }
  }
  return out;
}

// Largest |h sum f| over the 1-D sections of f along `axis`.
inline double section_integral(const DiscreteField& f, int axis) {
  const TorusGrid& g = f.grid();
  double worst = 0.0;
  for (std::size_t base = 0; base < f.size(); ++base) {
    if (g.unflatten(base)[axis] != 0) continue;
    cdouble acc{};
    for (int t = 0; t < g.N(); ++t) acc += f[shifted(g, base, axis, t)];
    worst = std::max(worst, std::abs(acc) * g.h());
  }
  return worst;
}

// Hoelder quotient of exponent alpha on offset class b: modulus * 2^{b alpha}.
inline double holder_quotient(const std::vector<double>& modulus, double alpha) {
  double worst = 0.0;
  for (std::size_t b = 0; b < modulus.size(); ++b) worst = std::max(worst, modulus[b] * std::exp2(alpha * static_cast<double>(b)));
  return worst;
}

// A modulus of continuity whose value at one mesh step is not below half its
// largest value marks a jump: no positive Hoelder exponent fits it.
inline bool modulus_continuous(const std::vector<double>& plain) {
  if (plain.size() < 2) return true;
  return plain.back() <= 0.5 * *std::max_element(plain.begin(), plain.end());
}

// Quotients at short offsets (|t| < s/8) may exceed those at long offsets by
// at most a factor 2. Short-offset classes exist only when J - j >= 4.
inline bool holder_bounded(const std::vector<double>& modulus, double alpha) {
  if (modulus.size() < 5) return true;
  double large = 0.0, small = 0.0;
  for (std::size_t b = 0; b < modulus.size(); ++b) {
    const double v = modulus[b] * std::exp2(alpha * static_cast<double>(b));
    if (b <= 2)
      large = std::max(large, v);
    else
      small = std::max(small, v);
  }
  return small <= 2.0 * large;
}

}  // namespace sampling

struct ConditionResult {
  std::string name;
  bool pass = false;
  double constant = 0.0;             // smallest C that works on the sample
  std::vector<int> scales;           // scales contributing to per_scale
  std::vector<double> per_scale;     // constant measured at each scale
  std::string note;
};

struct AdmissibilityReport {
  std::string filter;
  double delta = 1.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
  ConditionResult decay;
  ConditionResult sectional;
  ConditionResult holder;
  double alpha_effective = 0.0;

  bool admissible() const { return decay.pass && sectional.pass && holder.pass; }
};

namespace detail {

// Compares constants only over scales where the atom's support, (L-1) s(Q)
// per axis, fits in half the torus; coarser atoms overlap their own
// periodic copies and show no tail. Falls back to every scale when fewer
// than two scales qualify.
inline bool stable_across_scales(const ConditionResult& c, int filter_length) {
  std::vector<double> v;
  for (std::size_t t = 0; t < c.scales.size(); ++t)
    if ((filter_length - 1) * std::ldexp(1.0, -c.scales[t]) <= 0.5) v.push_back(c.per_scale[t]);
  // Too shallow for two wrap-free scales: fall back to the two finest.
  if (v.size() < 2) v.assign(c.per_scale.end() - std::min<std::ptrdiff_t>(2, std::ssize(c.per_scale)), c.per_scale.end());
  if (v.empty()) return false;
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  return std::isfinite(*mx) && *mn > 0.0 && *mx <= 2.0 * *mn;
}

}  // namespace detail

// Samples one cube per active scale and every direction of the system.
// Decay and sectional conditions pass when their constants are stable within
// a factor 2 across wrap-free scales; the Hoelder condition passes when the modulus of
// continuity decays and short-offset quotients stay within a factor 2 of the
// long-offset ones.
inline AdmissibilityReport verify_admissibility(const WaveletSystem& sys, double delta, double alpha,
                                                std::uint64_t seed = 1, std::size_t max_points = std::size_t{1} << 16) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw RangeError("Hoelder exponent must lie in (0, 1]");
  if (!(delta > 0.0)) throw RangeError("decay order must be positive");
  const TorusGrid& g = sys.grid();
  const ScaleRange active = sys.active_scales();
  if (active.empty()) throw RangeError("wavelet system has no active scales");

  AdmissibilityReport rep;
  rep.filter = sys.filter().name;
  rep.delta = delta;
  rep.alpha = alpha;
  rep.seed = seed;
  rep.decay.name = "decay";
  rep.sectional.name = "sectional";
  rep.holder.name = "holder";

  Rng rng(seed);
  bool continuous = true;
  bool sections_vanish = true;
  double worst_section = 0.0;
  bool holder_ok = true;
  std::vector<std::vector<double>> moduli;

  for (int j = active.lo; j <= active.hi; ++j) {
    Index3 idx{0, 0, 0};
    for (int a = 0; a < g.n; ++a) idx[a] = static_cast<int>(rng.below(std::uint64_t{1} << j));
    const DyadicCube q = make_cube(g.n, j, idx);
    double c_decay = 0.0, c_sec = 0.0, c_hold = 0.0;
    bool has_holder = false;
    for (const Direction& eps : sys.directions()) {
      const DiscreteField phi = sys.atom(q, eps);
      const auto pts = sampling::sample_points(g, q, rng, max_points);
      c_decay = std::max(c_decay, sampling::decay_ratio(phi, q, delta, pts));

      for (int a = 0; a < g.n; ++a) {
        if (!eps[a]) continue;
        const double si = sampling::section_integral(phi, a);
        worst_section = std::max(worst_section, si);
        if (si > 1e-9) sections_vanish = false;
        const DiscreteField E = sampling::running_integral(phi, a, q);
        c_sec = std::max(c_sec, sampling::decay_ratio(E, q, delta, pts) / q.side());
      }

      const auto npts = sampling::neighbourhood_points(g, q, rng, max_points);
      const auto hm = sampling::holder_modulus(phi, q, delta, npts);
      const auto& modulus = hm.weighted;
      if (modulus.size() >= 5) {
        continuous = continuous && sampling::modulus_continuous(hm.plain);
        holder_ok = holder_ok && sampling::holder_bounded(modulus, alpha);
        moduli.push_back(modulus);
        has_holder = true;
      }
      c_hold = std::max(c_hold, sampling::holder_quotient(modulus, alpha));
    }
    rep.decay.scales.push_back(j);
    rep.decay.per_scale.push_back(c_decay);
    rep.sectional.scales.push_back(j);
    rep.sectional.per_scale.push_back(c_sec);
    if (has_holder) {
      rep.holder.scales.push_back(j);
      rep.holder.per_scale.push_back(c_hold);
    }
    rep.decay.constant = std::max(rep.decay.constant, c_decay);
    rep.sectional.constant = std::max(rep.sectional.constant, c_sec);
    rep.holder.constant = std::max(rep.holder.constant, c_hold);
  }

  rep.decay.pass = detail::stable_across_scales(rep.decay, sys.filter().length());
  if (!rep.decay.pass) rep.decay.note = "decay constant not stable across scales";
  rep.sectional.pass = sections_vanish && detail::stable_across_scales(rep.sectional, sys.filter().length());
  if (!sections_vanish)
    rep.sectional.note = "section integrals do not vanish (" + std::to_string(worst_section) + ")";
  else if (!rep.sectional.pass)
    rep.sectional.note = "sectional constant not stable across scales";

  if (moduli.empty()) {
    rep.holder.pass = false;
    rep.holder.note = "grid too shallow for the Hoelder sampler (needs J - j >= 4)";
  } else if (!continuous) {
    rep.holder.pass = false;
    rep.holder.note = "modulus of continuity does not decay: discontinuous";
  } else {
    rep.holder.pass = holder_ok;
    if (!holder_ok) rep.holder.note = "quotient grows at short offsets";
  }

  if (continuous && !moduli.empty()) {
    for (int t = 1; t <= 20; ++t) {
      const double a = 0.05 * t;
      bool ok = true;
      for (const auto& m : moduli) ok = ok && sampling::holder_bounded(m, a);
      if (ok) rep.alpha_effective = a;
    }
  }
  return rep;
}

// Builds the system on the default active window [2, J-3] and measures its
// certificate constant with a fixed sampling seed.
inline WaveletSystem build_wavelet_system(const Filter& filter, const TorusGrid& grid, std::vector<Direction> directions,
                                          std::uint64_t certificate_seed = 1) {
  if (grid.J < 5) throw RangeError("wavelet systems need depth J >= 5");
  if (filter.length() > (grid.N() >> 2))
    throw RangeError("filter '" + filter.name + "' too long for depth " + std::to_string(grid.J));
  if (directions.empty()) throw RangeError("wavelet system needs at least one direction");
  for (const auto& d : directions)
    if (d.n != grid.n) throw RangeError("direction dimension does not match grid");
  WaveletSystem sys(grid, filter, std::move(directions), default_active_scales(grid));
  WaveletCertificate cert;
  cert.alpha = filter.alpha_default;
  cert.delta = 1.0;
  cert.compact = true;
  const AdmissibilityReport rep = verify_admissibility(sys, cert.delta, cert.alpha > 0.0 ? cert.alpha : 1.0, certificate_seed);
  cert.C = std::max(rep.decay.constant, rep.sectional.constant);
  if (cert.alpha > 0.0) cert.C = std::max(cert.C, rep.holder.constant);
  sys.set_certificate(cert);
  return sys;
}

inline WaveletSystem build_wavelet_system(const std::string& filter_name, const TorusGrid& grid,
                                          std::vector<Direction> directions,
                                          const FilterTable& table = FilterTable::builtin()) {
  return build_wavelet_system(table.find(filter_name), grid, std::move(directions));
}

}  // namespace rwl
