#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rwl/multipliers.hpp"
#include "rwl/operator.hpp"

using namespace rwl;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

DiscreteField wave(const TorusGrid& g, int axis, bool sine) {
  return DiscreteField::sample(g, [&](const std::array<double, 3>& x) {
    return sine ? std::sin(kTau * x[axis]) : std::cos(kTau * x[axis]);
  });
}

// Real field with random coefficients on |k_a| <= band, optionally without
// any mode on k_skip = 0.
DiscreteField band_limited(const TorusGrid& g, Rng& rng, int band, int skip_axis = -1) {
  SpectralField U(g);
  for (std::size_t s = 0; s < U.size(); ++s) {
    const Index3 k = g.frequency(s);
    bool keep = true;
    for (int a = 0; a < g.n; ++a) keep = keep && std::abs(k[a]) <= band;
    if (skip_axis >= 0 && k[skip_axis] == 0) keep = false;
    if (keep) U[s] = cdouble(rng.normal(), rng.normal());
  }
  DiscreteField u = ifft(U);
  DiscreteField v(g);
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i].real();
  return v;
}

// Cyclic shift by `steps` grid points along `axis`.
DiscreteField roll(const DiscreteField& u, int axis, int steps) {
  const TorusGrid& g = u.grid();
  DiscreteField out(g);
  for (std::size_t f = 0; f < u.size(); ++f) {
    Index3 idx = g.unflatten(f);
    idx[axis] = ((idx[axis] + steps) % g.N() + g.N()) % g.N();
    out[g.flatten(idx)] = u[f];
  }
  return out;
}

}  // namespace

TEST(Riesz, SineToMinusCosine) {
  const TorusGrid g = make_grid(1, 6);
  EXPECT_LT(max_abs_diff(riesz(wave(g, 0, true), 0), cdouble(-1.0) * wave(g, 0, false)), 1e-12);
}

TEST(Riesz, AlgebraOnMeanZeroFields) {
  Rng rng(31);
  for (int n : {1, 2, 3}) {
    const TorusGrid g = make_grid(n, n == 3 ? 4 : 6);
    for (int t = 0; t < 10; ++t) {
      const DiscreteField u = remove_mean(random_real_field(g, rng));
      DiscreteField sum(g);
      double energy = 0.0;
      for (int i = 0; i < n; ++i) {
        const DiscreteField r = riesz(u, i);
        energy += l2_norm(r) * l2_norm(r);
        sum += riesz(r, i);
      }
      EXPECT_NEAR(energy, l2_norm(u) * l2_norm(u), 1e-12 * energy);
      EXPECT_LT(max_abs(sum + u), 1e-10);
    }
  }
}

TEST(Riesz, InverseRecoversPreimage) {
  Rng rng(32);
  for (int n : {1, 2}) {
    const TorusGrid g = make_grid(n, 6);
    for (int i0 = 0; i0 < n; ++i0) {
      const DiscreteField v = band_limited(g, rng, 6, i0);
      EXPECT_LT(max_abs_diff(riesz_inverse(riesz(v, i0), i0), v), 1e-10);
    }
  }
}

TEST(Riesz, InverseRejectsHyperplaneMass) {
  const TorusGrid g = make_grid(2, 5);
  EXPECT_THROW(riesz_inverse(wave(g, 1, true), 0), DomainError);
  DiscreteField one(g);
  for (auto& v : one.values()) v = 1.0;
  EXPECT_THROW(riesz_inverse(one, 0), DomainError);
}

// Mode arithmetic: sin = (e_1 - e_-1) / 2i and the inverse multiplier is
// i|k|/k_1, so the k = +-1 modes become 1/2 each, i.e. cos(2 pi x_1).
TEST(Riesz, InverseSingleModeN2) {
  const TorusGrid g = make_grid(2, 5);
  const DiscreteField u = wave(g, 0, true);
  const SpectralField R = fft(riesz_inverse(u, 0));
  for (std::size_t s = 0; s < R.size(); ++s) {
    const Index3 k = g.frequency(s);
    const bool hit = k[1] == 0 && std::abs(k[0]) == 1;
    EXPECT_NEAR(std::abs(R[s] - (hit ? 0.5 : 0.0)), 0.0, 1e-13);
  }
  EXPECT_LT(max_abs_diff(riesz_inverse(u, 0), wave(g, 0, false)), 1e-12);
}

TEST(Riesz, CommutesWithBlocksAndTranslations) {
  Rng rng(33);
  const TorusGrid g = make_grid(2, 6);
  const CalderonPair pair(g);
  for (int t = 0; t < 5; ++t) {
    const DiscreteField u = random_real_field(g, rng);
    for (int i = 0; i < 2; ++i) {
      const int m = pair.min_scale() + static_cast<int>(rng.below(static_cast<std::uint64_t>(pair.max_scale() + 1)));
      EXPECT_LT(max_abs_diff(riesz(lp_block(u, pair, m), i), lp_block(riesz(u, i), pair, m)), 1e-10);
      const int steps = static_cast<int>(rng.below(64));
      EXPECT_LT(max_abs_diff(riesz(roll(u, 1 - i, steps), i), roll(riesz(u, i), 1 - i, steps)), 1e-10);
    }
  }
}

TEST(Derivative, SingleModeAndConstant) {
  const TorusGrid g = make_grid(2, 6);
  for (int a = 0; a < 2; ++a) {
    EXPECT_LT(max_abs_diff(partial_derivative(wave(g, a, true), a), cdouble(kTau) * wave(g, a, false)), 1e-11);
  }
  DiscreteField c(g);
  for (auto& v : c.values()) v = 3.5;
  EXPECT_LT(max_abs(partial_derivative(c, 1)), 1e-12);
}

// Centered differences have O(h^2) error: halving h cuts it by about 4.
TEST(Derivative, MatchesFiniteDifferences) {
  Rng rng(34);
  std::vector<double> errors, scale;
  std::vector<std::pair<double, double>> coeffs;
  for (int k = 1; k <= 3; ++k) coeffs.emplace_back(rng.normal(), rng.normal());
  for (int J : {7, 8, 9}) {
    const TorusGrid g = make_grid(1, J);
    const DiscreteField u = DiscreteField::sample(g, [&](const std::array<double, 3>& x) {
      double s = 0.0;
      for (int k = 1; k <= 3; ++k) s += coeffs[k - 1].first * std::cos(kTau * k * x[0]) + coeffs[k - 1].second * std::sin(kTau * k * x[0]);
      return s;
    });
    const DiscreteField d = partial_derivative(u, 0);
    double err = 0.0;
    for (int i = 0; i < g.N(); ++i) {
      const cdouble fd = (u[static_cast<std::size_t>((i + 1) % g.N())] - u[static_cast<std::size_t>((i - 1 + g.N()) % g.N())]) / (2.0 * g.h());
      err = std::max(err, std::abs(fd - d[static_cast<std::size_t>(i)]));
    }
    errors.push_back(err);
    scale.push_back(max_abs(d));
  }
  EXPECT_LT(errors[0], 1e-2 * scale[0]);
  for (std::size_t i = 1; i < errors.size(); ++i) EXPECT_NEAR(errors[i] / errors[i - 1], 0.25, 0.02);
}

TEST(Sectional, CosineAndInverse) {
  Rng rng(35);
  const TorusGrid g = make_grid(2, 6);
  for (int a = 0; a < 2; ++a)
    EXPECT_LT(max_abs_diff(sectional_integral(wave(g, a, false), a), cdouble(1.0 / kTau) * wave(g, a, true)), 1e-11);
  for (int t = 0; t < 5; ++t) {
    const DiscreteField u = band_limited(g, rng, 10, 0);
    EXPECT_LT(max_abs_diff(partial_derivative(sectional_integral(u, 0), 0), u), 1e-10);
  }
  DiscreteField one(g);
  for (auto& v : one.values()) v = 1.0;
  EXPECT_THROW(sectional_integral(one, 0), DomainError);
}

TEST(Calderon, PartitionOfUnityOnGrid) {
  for (auto [n, J] : {std::pair{1, 10}, std::pair{2, 7}, std::pair{3, 5}}) {
    const TorusGrid g = make_grid(n, J);
    const CalderonPair pair(g);
    for (std::size_t s = 0; s < g.size(); ++s) {
      double acc = 0.0;
      for (int m = pair.min_scale(); m <= pair.max_scale(); ++m) acc += pair.table(m)[s];
      EXPECT_NEAR(acc, s == 0 ? 0.0 : 1.0, 1e-10);
    }
  }
}

// The continuum identity sum_l v(2^l t) w(2^l t) = 1 for every t > 0.
TEST(Calderon, PartitionOnContinuumAndSupport) {
  const CalderonPair pair(make_grid(1, 8));
  Rng rng(36);
  for (int t = 0; t < 500; ++t) {
    const double r = std::exp2(rng.uniform(-20.0, 20.0));
    double acc = 0.0;
    for (int l = -40; l <= 40; ++l) acc += std::pow(pair.v_hat(std::ldexp(r, l)), 2);
    EXPECT_NEAR(acc, 1.0, 1e-10);
    const double outside = rng.uniform() < 0.5 ? rng.uniform(0.0, 0.5) : rng.uniform(2.0, 100.0);
    EXPECT_EQ(pair.v_hat(outside), 0.0);
  }
  EXPECT_GT(pair.v_hat(1.0), 0.0);
}

TEST(Calderon, BlocksSumAndAreSelfAdjoint) {
  Rng rng(37);
  const TorusGrid g = make_grid(2, 6);
  const CalderonPair pair(g);
  for (int t = 0; t < 5; ++t) {
    const DiscreteField u = remove_mean(random_real_field(g, rng));
    const DiscreteField v = random_complex_field(g, rng);
    DiscreteField sum(g);
    for (int m = pair.min_scale(); m <= pair.max_scale(); ++m) {
      const DiscreteField b = lp_block(u, pair, m);
      sum += b;
      EXPECT_NEAR(std::abs(inner(b, v) - inner(u, lp_block(v, pair, m))), 0.0, 1e-11);
      for (int m2 = m + 3; m2 <= pair.max_scale(); ++m2) EXPECT_LT(max_abs(lp_block(b, pair, m2)), 1e-13);
    }
    EXPECT_LT(relative_l2_error(sum, u), 1e-8);
  }
  // |k| = 1 lies outside 2^4 [1/2, 2].
  EXPECT_LT(max_abs(lp_block(wave(g, 0, true), pair, 4)), 1e-14);
  EXPECT_THROW(pair.table(pair.max_scale() + 1), RangeError);
}

TEST(MultiplierOperators, AdjointPairing) {
  Rng rng(38);
  const TorusGrid g = make_grid(2, 5);
  const auto R = riesz_operator(g, 1);
  const DiscreteField u = random_complex_field(g, rng), v = random_complex_field(g, rng);
  EXPECT_NEAR(std::abs(inner(R(u), v) - inner(u, R.apply_adjoint(v))), 0.0, 1e-12);
  const auto P = off_hyperplane_projector(g, 0);
  EXPECT_LT(max_abs_diff(P(P(u)), P(u)), 1e-13);
  EXPECT_THROW(riesz(u, 2), RangeError);
}
