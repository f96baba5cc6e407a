#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rwl/dyadic.hpp"
#include "rwl/error.hpp"
#include "rwl/grid.hpp"
#include "rwl/haar.hpp"
#include "rwl/littlewood_paley.hpp"
#include "rwl/multipliers.hpp"
#include "rwl/operator.hpp"
#include "rwl/parallel.hpp"
#include "rwl/rng.hpp"
#include "rwl/wavelet.hpp"

namespace rwl {

struct NormEstimate {
  double p = 2.0;
  double lower = 0.0;                // best ratio ||Au||_p / ||u||_p found
  std::optional<double> certified;   // exact value (p = 2, dense)
  std::string method;                // dense-decomposition | power-iteration | gradient-ascent | random-probe | structural-zero
  int probes = 0;
  int iterations = 0;
  bool converged = true;
  std::string note;

  double value() const { return certified ? *certified : lower; }
};

struct Budget {
  int max_iterations = 300;
  double tolerance = 1e-6;
  int random_probes = 6;
  int ascent_starts = 3;
  int ascent_steps = 40;
  std::size_t dense_limit = 4096;
  std::uint64_t seed = 1;
};

namespace detail {

// J_p(y) = |y|^{p-2} y / ||y||_p^{p-1}: the unit-norm dual element of y in L^{p'}.
inline DiscreteField duality_map(const DiscreteField& y, double p) {
  const double norm = lp_norm(y, p);
  DiscreteField out(y.grid());
  if (norm == 0.0) return out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double a = std::abs(y[i]) / norm;
    out[i] = a == 0.0 ? cdouble{} : std::pow(a, p - 2.0) * (y[i] / norm);
  }
  return out;
}

inline double ratio(const LinearOperatorHandle& A, const DiscreteField& u, double p) {
  const DiscreteField x = A.domain ? A.domain(u) : u;
  const double den = lp_norm(x, p);
  if (den == 0.0) return 0.0;
  return lp_norm(A.apply(x), p) / den;
}

// Smooth random probe: a few low modes with random phases.
inline DiscreteField smooth_probe(const TorusGrid& g, Rng& rng, int kmax) {
  SpectralField U(g);
  for (std::size_t s = 0; s < U.size(); ++s) {
    const Index3 k = g.frequency(s);
    bool inside = true;
    for (int a = 0; a < g.n; ++a) inside = inside && std::abs(k[a]) <= kmax;
    if (inside) U[s] = cdouble(rng.normal(), rng.normal());
  }
  DiscreteField u = ifft(U);
  for (auto& v : u.values()) v = v.real();
  return u;
}

inline double dense_norm(const LinearOperatorHandle& A) {
  const TorusGrid& g = A.grid;
  const auto dim = static_cast<Eigen::Index>(g.size());
  DiscreteField e(g);
  if (A.maps_real_to_real) {
    Eigen::MatrixXd M(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
      e[static_cast<std::size_t>(c)] = 1.0;
      const DiscreteField col = A(e);
      e[static_cast<std::size_t>(c)] = 0.0;
      for (Eigen::Index r = 0; r < dim; ++r) M(r, c) = col[static_cast<std::size_t>(r)].real();
    }
    const Eigen::MatrixXd G = M.transpose() * M;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  }
  Eigen::MatrixXcd M(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    e[static_cast<std::size_t>(c)] = 1.0;
    const DiscreteField col = A(e);
    e[static_cast<std::size_t>(c)] = 0.0;
    for (Eigen::Index r = 0; r < dim; ++r) M(r, c) = col[static_cast<std::size_t>(r)];
  }
  const Eigen::MatrixXcd G = M.adjoint() * M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace detail

// Lower bound (and, for p = 2, certified or converged value) of ||A||_{p->p}.
inline NormEstimate op_norm(const LinearOperatorHandle& A, double p, const Budget& budget = {}) {
  if (!(p > 1.0) || !std::isfinite(p)) throw RangeError("op_norm requires finite p > 1");
  if (budget.max_iterations <= 0 || budget.random_probes <= 0) throw RangeError("op_norm budget must be positive");
  const TorusGrid& g = A.grid;
  Rng rng(budget.seed);

  // Linearity and emptiness probes.
  if (A.linear) {
    const double defect = linearity_defect(A, rng, 2);
    if (defect > 1e-10) throw OperatorError(A.label + ": linearity probe failed (defect " + std::to_string(defect) + ")");
  }

  NormEstimate est;
  est.p = p;
  std::vector<DiscreteField> starts;
  double best = 0.0;
  DiscreteField best_u;
  for (int t = 0; t < budget.random_probes; ++t) {
    DiscreteField u = (t % 2 == 0) ? random_real_field(g, rng) : detail::smooth_probe(g, rng, 4 << (t / 2));
    const double r = detail::ratio(A, u, p);
    ++est.probes;
    if (r > best || best_u.size() == 0) {
      best = std::max(best, r);
      best_u = u;
    }
    starts.push_back(std::move(u));
  }
  if (best == 0.0) throw OperatorError(A.label + ": operator vanishes on every probe (empty operator)");
  est.lower = best;
  est.method = "random-probe";

  if (p == 2.0 && g.size() <= budget.dense_limit) {
    est.certified = detail::dense_norm(A);
    est.method = "dense-decomposition";
    est.lower = std::min(est.lower, *est.certified);
    return est;
  }

  if (!A.has_adjoint()) {
    est.note = "no adjoint: random probes only";
    return est;
  }

  if (p == 2.0) {
    DiscreteField x = best_u;
    if (A.domain) x = A.domain(x);
    x *= cdouble(1.0 / l2_norm(x));
    double lambda = 0.0;
    est.converged = false;
    for (int it = 1; it <= budget.max_iterations; ++it) {
      DiscreteField y = A.apply_adjoint(A(x));
      const double nl = l2_norm(y);
      est.iterations = it;
      if (nl == 0.0) break;
      const bool done = std::fabs(nl - lambda) <= budget.tolerance * nl;
      lambda = nl;
      x = cdouble(1.0 / nl) * std::move(y);
      if (done) {
        est.converged = true;
        break;
      }
    }
    est.lower = std::max(est.lower, detail::ratio(A, x, 2.0));
    est.method = "power-iteration";
    if (!est.converged) est.note = "iteration budget exhausted before tolerance";
    return est;
  }

  // p != 2: nonlinear power method x <- J_{p'}(A^* J_p(A x)) from the best probes.
  const double q = p / (p - 1.0);
  std::vector<std::size_t> order(starts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> start_ratio(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) start_ratio[i] = detail::ratio(A, starts[i], p);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return start_ratio[a] > start_ratio[b]; });
  for (int s = 0; s < budget.ascent_starts && s < static_cast<int>(order.size()); ++s) {
    DiscreteField x = starts[order[static_cast<std::size_t>(s)]];
    if (A.domain) x = A.domain(x);
    double prev = detail::ratio(A, x, p);
    for (int it = 0; it < budget.ascent_steps; ++it) {
      const DiscreteField Ax = A(x);
      if (lp_norm(Ax, p) == 0.0) break;
      DiscreteField z = A.apply_adjoint(detail::duality_map(Ax, p));
      if (lp_norm(z, q) == 0.0) break;
      x = detail::duality_map(z, q);
      const double r = detail::ratio(A, x, p);
      ++est.iterations;
      est.lower = std::max(est.lower, r);
      if (std::fabs(r - prev) <= budget.tolerance * r) break;
      prev = r;
    }
  }
  est.method = "gradient-ascent";
  return est;
}

// Least squares of log2(value) against x.
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual in log2 units
  int points = 0;
};

inline FitResult fit_exponent(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 4) throw RangeError("fit_exponent needs at least 4 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> ys;
  for (const auto& [x, v] : pts) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("fit_exponent needs positive finite values");
    const double y = std::log2(v);
    ys.push_back(y);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("fit_exponent needs at least two distinct abscissae");
  FitResult f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = ys[i] - (f.intercept + f.slope * pts[i].first);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.points = static_cast<int>(pts.size());
  return f;
}

// Least M >= 0 with ratio <= 2^M.
inline int threshold_M(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw DomainError("threshold_M needs a positive finite ratio");
  return std::max(0, static_cast<int>(std::ceil(std::log2(ratio) - 1e-12)));
}

inline int threshold_M(const DiscreteField& u, double p, int i0, double riesz_norm) {
  const double ru = lp_norm(riesz(u, i0), p);
  if (ru < 1e-13) throw DomainError("threshold_M: R_i0 u vanishes");
  return threshold_M(lp_norm(u, p) * riesz_norm / ru);
}

enum class ProjectorKind { wavelet, haar };

struct InterpConfig {
  double p = 2.0;
  double alpha = 1.0;
  int i0 = 0;
  Direction eps;
  ProjectorKind projector = ProjectorKind::wavelet;

  double theta() const { return std::max(0.5, 1.0 / p); }
};

inline void validate(const InterpConfig& cfg) {
  if (!(cfg.p > 1.0)) throw RangeError("interpolation exponent p must exceed 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw RangeError("alpha must lie in (0, 1]");
  if (cfg.i0 < 0 || cfg.i0 >= cfg.eps.n || !cfg.eps[cfg.i0]) throw RangeError("eps must carry a wavelet factor at i0");
}

// W-form: ||W u|| / (||u||^{1-a} ||R u||^a), or for a = 1
// ||W u|| / (||R u|| (1 + log(||u|| / ||R u||))).
// P-form: ||P u|| / (||u||^theta ||R u||^{1-theta}), theta = max(1/2, 1/p).
inline double interp_ratio(const DiscreteField& u, const InterpConfig& cfg, const FieldMap& projector) {
  validate(cfg);
  const double nu = lp_norm(u, cfg.p);
  const double nr = lp_norm(riesz(u, cfg.i0), cfg.p);
  if (nu == 0.0 || nr == 0.0) throw DomainError("interp_ratio: zero denominator");
  const double num = lp_norm(projector(u), cfg.p);
  double den = 0.0;
  if (cfg.projector == ProjectorKind::haar) {
    const double t = cfg.theta();
    den = std::pow(nu, t) * std::pow(nr, 1.0 - t);
  } else if (cfg.alpha < 1.0) {
    den = std::pow(nu, 1.0 - cfg.alpha) * std::pow(nr, cfg.alpha);
  } else {
    den = nr * (1.0 + std::log(nu / nr));
  }
  if (!(den > 0.0)) throw DomainError("interp_ratio: nonpositive denominator");
  return num / den;
}

// ||v||_p / ||R_i0 v||_p with v = projector(u); empty when v = 0.
inline std::optional<double> coercivity_check(const DiscreteField& u, int i0, double p, const FieldMap& projector) {
  const DiscreteField v = projector(u);
  const double nv = lp_norm(v, p);
  if (nv <= 1e-13 * std::max(1.0, lp_norm(u, p))) return std::nullopt;
  const double nr = lp_norm(riesz(v, i0), p);
  if (nr == 0.0) throw DomainError("coercivity_check: R_i0 v vanishes on a nonzero v");
  return nv / nr;
}

// Standard test-function suite. Every member is a function on the torus
// (atoms aside, which come from the grid's own system) drawn from a seeded
// stream that does not depend on J, so depths J and J+1 see the same suite.
struct SuiteSpec {
  int bandlimited = 40;
  int atoms = 20;
  int packets = 20;
  int riesz_preimages = 20;
  int band = 8;
  std::uint64_t seed = 7;

  int total() const { return bandlimited + atoms + packets + riesz_preimages; }
};

struct SuiteMember {
  std::string family;
  DiscreteField field;
};

inline std::vector<SuiteMember> make_suite(const SuiteSpec& spec, const WaveletSystem& sys, int i0) {
  const TorusGrid& g = sys.grid();
  if (2 * spec.band >= g.N()) throw RangeError("suite band exceeds the grid's Nyquist frequency");
  std::vector<SuiteMember> out;
  const double tau = 2.0 * std::numbers::pi;

  // Real trigonometric polynomials sum_k a_k cos(2 pi k.x) + b_k sin(2 pi k.x),
  // |k_a| <= band; the grid resolves them exactly, so they are assembled from
  // their Fourier coefficients.
  Rng rb(derive_seed(spec.seed, 1));
  const int per = 2 * spec.band + 1;
  int modes = 1;
  for (int a = 0; a < g.n; ++a) modes *= per;
  for (int t = 0; t < spec.bandlimited; ++t) {
    SpectralField U(g);
    for (int c = 0; c < modes; ++c) {
      Index3 k{0, 0, 0}, mk{0, 0, 0};
      int rem = c;
      for (int a = g.n - 1; a >= 0; --a) {
        k[a] = rem % per - spec.band;
        mk[a] = -k[a];
        rem /= per;
      }
      const double a = rb.normal(), b = rb.normal();
      U[g.slot_of_frequency(k)] += 0.5 * cdouble(a, -b);
      U[g.slot_of_frequency(mk)] += 0.5 * cdouble(a, b);
    }
    DiscreteField u = ifft(U);
    for (auto& v : u.values()) v = v.real();
    out.push_back({"bandlimited", std::move(u)});
  }

  const auto dirs = all_directions(g.n);
  Rng ra(derive_seed(spec.seed, 2));
  auto random_atom = [&](Rng& r) {
    const int j = 2 + static_cast<int>(r.below(2));
    Index3 idx{0, 0, 0};
    for (int a = 0; a < g.n; ++a) idx[a] = static_cast<int>(r.below(std::uint64_t{1} << j));
    const Direction& e = dirs[static_cast<std::size_t>(r.below(dirs.size()))];
    return sys.atom(make_cube(g.n, j, idx), e);
  };
  for (int t = 0; t < spec.atoms; ++t) out.push_back({"atom", random_atom(ra)});

  Rng rp(derive_seed(spec.seed, 3));
  for (int t = 0; t < spec.packets; ++t) {
    std::array<double, 3> c{}, sigma{};
    Index3 k{0, 0, 0};
    for (int a = 0; a < g.n; ++a) {
      c[a] = rp.uniform();
      sigma[a] = rp.uniform(0.03, 0.2);
      k[a] = static_cast<int>(rp.below(2 * 12 + 1)) - 12;
    }
    const double phase = rp.uniform(0.0, tau);
    out.push_back({"packet", DiscreteField::sample(g, [&](const std::array<double, 3>& x) {
                     double e = 0.0, ph = phase;
                     for (int a = 0; a < g.n; ++a) {
                       double d = x[a] - c[a];
                       d -= std::round(d);
                       e += d * d / (2.0 * sigma[a] * sigma[a]);
                       ph += tau * k[a] * x[a];
                     }
                     return std::exp(-e) * std::cos(ph);
                   })});
  }

  Rng rr(derive_seed(spec.seed, 4));
  const MultiplierTable off = off_hyperplane_table(g, i0);
  for (int t = 0; t < spec.riesz_preimages; ++t) {
    const DiscreteField a = apply_multiplier(random_atom(rr), std::span<const cdouble>(off));
    out.push_back({"riesz_preimage", riesz_inverse(a, i0)});
  }
  return out;
}

// One scanned parameter value.
struct ScanPoint {
  int value = 0;
  NormEstimate estimate;
  bool in_fit = false;
};

struct ScanReport {
  std::string axis;     // l | m | mu | lambda
  std::string series;   // operator family, e.g. "T", "T_Rinv", "S"
  double p = 2.0;
  std::vector<ScanPoint> points;
  std::optional<FitResult> fit;
  std::optional<double> c_fit;
  std::string envelope;  // law used for c_fit
  std::string note;
};

namespace detail {

inline NormEstimate structural_zero(double p) {
  NormEstimate e;
  e.p = p;
  e.lower = 0.0;
  e.certified = 0.0;
  e.method = "structural-zero";
  e.probes = 0;
  return e;
}

}  // namespace detail

// Scans ||T_l||_p (and ||T_l R_i0^{-1}||_p on its domain) over l. Shifts where
// no active scale meets a resolvable band are exact zeros of the grid and are
// reported as such. The slope is fitted on the requested range restricted to
// the interior of the resolvable l-range.
inline std::vector<ScanReport> scan_t_ell(std::shared_ptr<const LittlewoodPaley> lp, const Direction& eps, double p,
                                          int ell_lo, int ell_hi, bool include_inverse, const Budget& budget,
                                          int workers = 1) {
  if (ell_hi < ell_lo) throw RangeError("empty l-range");
  if (ell_hi > lp->ell_max()) throw RangeError("l-range exceeds the finest resolvable band");
  if (include_inverse && !eps.i0) throw RangeError("inverse scan needs a direction with i0");
  const int fit_lo = std::max(ell_lo, lp->ell_min() + 1);
  const int fit_hi = std::min(ell_hi, lp->ell_max() - 1);
  const int series = include_inverse ? 2 : 1;
  const auto count = static_cast<std::size_t>((ell_hi - ell_lo + 1) * series);
  auto ests = parallel_map<NormEstimate>(count, workers, [&](std::size_t t) {
    const int ell = ell_lo + static_cast<int>(t) / series;
    const bool inv = static_cast<int>(t) % series == 1;
    if (ell < lp->ell_min()) return detail::structural_zero(p);
    Budget b = budget;
    b.seed = derive_seed(budget.seed, t);
    const auto op = inv ? t_ell_riesz_inverse_operator(lp, ell, eps, *eps.i0) : t_ell_operator(lp, ell, eps);
    return op_norm(op, p, b);
  });
  std::vector<ScanReport> out(static_cast<std::size_t>(series));
  for (int s = 0; s < series; ++s) {
    ScanReport& r = out[static_cast<std::size_t>(s)];
    r.axis = "l";
    r.series = s == 0 ? "T" : "T_Rinv";
    r.p = p;
    std::vector<std::pair<double, double>> pts;
    for (int ell = ell_lo; ell <= ell_hi; ++ell) {
      ScanPoint pt;
      pt.value = ell;
      pt.estimate = ests[static_cast<std::size_t>((ell - ell_lo) * series + s)];
      pt.in_fit = ell >= fit_lo && ell <= fit_hi && pt.estimate.value() > 0.0;
      if (pt.in_fit) pts.emplace_back(ell, pt.estimate.value());
      r.points.push_back(pt);
    }
    if (pts.size() >= 4)
      r.fit = fit_exponent(pts);
    else
      r.note = "fewer than 4 nonzero points in the fit window";
  }
  return out;
}

// C_fit = max over points of value / law(x).
inline double envelope_constant(const ScanReport& r, const std::function<double(double)>& law) {
  double c = 0.0;
  for (const auto& pt : r.points)
    if (pt.estimate.value() > 0.0) c = std::max(c, pt.estimate.value() / law(pt.value));
  return c;
}

inline double law_low_shift(double ell) { return std::exp2(-std::fabs(ell)) * std::fabs(ell); }
inline double law_predecessor(double lambda, int n) { return std::sqrt(lambda) * std::exp2(n * lambda); }

inline ScanReport scan_t_ell_m(std::shared_ptr<const LittlewoodPaley> lp, const Direction& eps, double p, int ell,
                               int m_lo, int m_hi, const Budget& budget, int workers = 1) {
  if (m_hi < m_lo) throw RangeError("empty m-range");
  auto ests = parallel_map<NormEstimate>(static_cast<std::size_t>(m_hi - m_lo + 1), workers, [&](std::size_t t) {
    const int m = m_lo + static_cast<int>(t);
    if (m < lp->m_min(ell) || m > lp->m_max(ell)) return detail::structural_zero(p);
    Budget b = budget;
    b.seed = derive_seed(budget.seed, t);
    return op_norm(t_ell_m_operator(lp, ell, m, eps), p, b);
  });
  ScanReport r;
  r.axis = "m";
  r.series = "T_l" + std::to_string(ell) + "_m";
  r.p = p;
  std::vector<std::pair<double, double>> pts;
  for (int m = m_lo; m <= m_hi; ++m) {
    ScanPoint pt{m, ests[static_cast<std::size_t>(m - m_lo)], false};
    pt.in_fit = m >= 0 && pt.estimate.value() > 0.0;
    if (pt.in_fit) pts.emplace_back(m, pt.estimate.value());
    r.points.push_back(pt);
  }
  if (pts.size() >= 4) r.fit = fit_exponent(pts);
  return r;
}

// ||T_mu||_p on the Haar system for the given shifts (first axis).
inline ScanReport scan_semenov(const TorusGrid& g, double p, const std::vector<int>& mus, const Budget& budget,
                               int workers = 1) {
  auto ests = parallel_map<NormEstimate>(mus.size(), workers, [&](std::size_t t) {
    Budget b = budget;
    b.seed = derive_seed(budget.seed, t);
    return op_norm(semenov_operator(g, {mus[t], 0, 0}), p, b);
  });
  ScanReport r;
  r.axis = "mu";
  r.series = "T_mu";
  r.p = p;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t t = 0; t < mus.size(); ++t) {
    ScanPoint pt{mus[t], ests[t], true};
    pts.emplace_back(std::log2(2.0 + std::abs(mus[t])), pt.estimate.value());
    r.points.push_back(pt);
  }
  if (pts.size() >= 4) r.fit = fit_exponent(pts);
  r.envelope = "C log(2+|mu|)";
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& pt : r.points) {
    const double v = pt.estimate.value() / std::log(2.0 + std::abs(pt.value));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  r.c_fit = hi;
  r.note = "max/min of ||T_mu||/log(2+|mu|) = " + std::to_string(hi / lo);
  return r;
}

// ||S||_p of the predecessor rearrangement with F = the wavelets themselves.
inline ScanReport scan_predecessor(std::shared_ptr<const WaveletSystem> sys, const Direction& eps, double p,
                                   const std::vector<int>& lambdas, const Budget& budget, int workers = 1) {
  auto ests = parallel_map<NormEstimate>(lambdas.size(), workers, [&](std::size_t t) {
    Budget b = budget;
    b.seed = derive_seed(budget.seed, t);
    auto s = std::make_shared<const PredecessorRearrangement>(sys, lambdas[t], KernelFamily::from_wavelets(sys, eps), eps);
    return op_norm(predecessor_operator(s, sys->grid(), lambdas[t]), p, b);
  });
  ScanReport r;
  r.axis = "lambda";
  r.series = "S";
  r.p = p;
  for (std::size_t t = 0; t < lambdas.size(); ++t) r.points.push_back(ScanPoint{lambdas[t], ests[t], true});
  const int n = sys->grid().n;
  r.envelope = "C lambda^(1/2) 2^(n lambda)";
  r.c_fit = envelope_constant(r, [n](double l) { return law_predecessor(l, n); });
  std::vector<std::pair<double, double>> pts;
  for (const auto& pt : r.points) pts.emplace_back(pt.value, pt.estimate.value());
  if (pts.size() >= 4) r.fit = fit_exponent(pts);
  return r;
}

}  // namespace rwl
