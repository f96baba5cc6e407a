#include <cmath>
#include <memory>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "rwl/admissibility.hpp"
#include "rwl/estimates.hpp"
#include "rwl/haar.hpp"

using namespace rwl;

namespace {

DyadicCube random_cube(Rng& rng, int n, int j) {
  Index3 idx{0, 0, 0};
  for (int a = 0; a < n; ++a) idx[a] = static_cast<int>(rng.below(std::uint64_t{1} << j));
  return make_cube(n, j, idx);
}

std::shared_ptr<const WaveletSystem> system(const std::string& name, int n, int J) {
  return std::make_shared<const WaveletSystem>(build_wavelet_system(name, make_grid(n, J), all_directions(n)));
}

}  // namespace

TEST(Haar, FunctionDefinition) {
  const TorusGrid g = make_grid(1, 5);
  const DiscreteField h = haar_function(make_cube(1, 0, {0, 0, 0}), make_direction(1, {1, 0, 0}), g);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h[i].real(), i < 16 ? 1.0 : -1.0);

  Rng rng(41);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + static_cast<int>(rng.below(3));
    const TorusGrid gn = make_grid(n, n == 3 ? 4 : 5);
    const DyadicCube q = random_cube(rng, n, static_cast<int>(rng.below(static_cast<std::uint64_t>(gn.J))));
    const auto dirs = all_directions(n);
    const Direction e = dirs[rng.below(dirs.size())];
    const DiscreteField hq = haar_function(q, e, gn);
    EXPECT_NEAR(inner(hq, hq).real(), q.volume(), 1e-12);
  }

  const TorusGrid g2 = make_grid(2, 4);
  const DiscreteField h2 = haar_function(make_cube(2, 0, {0, 0, 0}), make_direction(2, {1, 0, 0}), g2);
  EXPECT_EQ(max_sectional_mean(h2, 0), 0.0);
  EXPECT_EQ(h2[g2.flatten({0, 0, 0})].real(), 1.0);
  EXPECT_EQ(h2[g2.flatten({0, 15, 0})].real(), 1.0);
  EXPECT_EQ(h2[g2.flatten({8, 0, 0})].real(), -1.0);
}

TEST(Haar, CompletenessOnRandomFields) {
  Rng rng(42);
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + t % 3;
    const TorusGrid g = make_grid(n, n == 1 ? 9 : (n == 2 ? 5 : 3));
    const DiscreteField u = random_complex_field(g, rng);
    EXPECT_LT(relative_l2_error(haar_synthesize(haar_analyze(u)), u), 1e-8);
  }
}

// Direct oracle for the coefficients: a_Q = <u, h_Q> / |Q|.
TEST(Haar, CoefficientsMatchInnerProducts) {
  Rng rng(43);
  const TorusGrid g = make_grid(2, 4);
  const DiscreteField u = random_complex_field(g, rng);
  const HaarCoefficients a = haar_analyze(u);
  EXPECT_NEAR(std::abs(a.mean() - mean(u)), 0.0, 1e-13);
  for (int t = 0; t < 40; ++t) {
    const DyadicCube q = random_cube(rng, 2, static_cast<int>(rng.below(4)));
    for (const auto& e : all_directions(2))
      EXPECT_NEAR(std::abs(a.at(q, e) - inner(u, haar_function(q, e, g)) / q.volume()), 0.0, 1e-12);
  }
}

TEST(Haar, ProjectionAxioms) {
  Rng rng(44);
  const TorusGrid g = make_grid(2, 5);
  const Direction e = make_direction(2, {1, 0, 0});
  const Direction other = make_direction(2, {1, 1, 0});
  const ScaleRange all = full_haar_scales(g);
  const DyadicCube q = random_cube(rng, 2, 3);
  const DiscreteField h = haar_function(q, e, g);
  EXPECT_LT(max_abs_diff(haar_projection(h, e, all), h), 1e-12);
  EXPECT_LT(max_abs(haar_projection(haar_function(q, other, g), e, all)), 1e-12);
  for (int t = 0; t < 10; ++t) {
    const DiscreteField u = random_complex_field(g, rng);
    const DiscreteField p = haar_projection(u, e, ScaleRange{1, 3});
    EXPECT_LT(std::abs(inner(p, u - p)), 1e-10);
  }
}

TEST(Haar, SquareFunction) {
  const TorusGrid g = make_grid(2, 4);
  const DyadicCube q = make_cube(2, 2, {1, 3, 0});
  const DiscreteField s = square_function(haar_function(q, make_direction(2, {0, 1, 0}), g));
  for (std::size_t f = 0; f < s.size(); ++f) {
    const Index3 idx = g.unflatten(f);
    const bool inside = idx[0] / 4 == 1 && idx[1] / 4 == 3;
    EXPECT_NEAR(s[f].real(), inside ? 1.0 : 0.0, 1e-13);
  }
  DiscreteField c(g);
  for (auto& v : c.values()) v = 2.0;
  EXPECT_LT(max_abs(square_function(c)), 1e-13);

  Rng rng(45);
  for (int t = 0; t < 100; ++t) {
    const TorusGrid gt = make_grid(1 + t % 2, t % 2 ? 5 : 8);
    const DiscreteField u = random_real_field(gt, rng);
    const DiscreteField v = remove_mean(u);
    EXPECT_NEAR(l2_norm(square_function(u)), l2_norm(v), 1e-8 * l2_norm(v));
  }
}

TEST(Semenov, IdentityUnitarityAndComposition) {
  Rng rng(46);
  const TorusGrid g = make_grid(1, 8);
  const DiscreteField u = random_real_field(g, rng);
  EXPECT_LT(max_abs_diff(semenov_rearrange(u, {0, 0, 0}), u), 1e-12);
  for (int t = 0; t < 20; ++t) {
    const int mu = static_cast<int>(rng.below(41)) - 20, nu = static_cast<int>(rng.below(41)) - 20;
    const DiscreteField v = remove_mean(random_real_field(g, rng));
    EXPECT_NEAR(l2_norm(semenov_rearrange(v, {mu, 0, 0})), l2_norm(v), 1e-10 * l2_norm(v));
    EXPECT_LT(max_abs_diff(semenov_rearrange(semenov_rearrange(v, {mu, 0, 0}), {nu, 0, 0}),
                           semenov_rearrange(v, {mu + nu, 0, 0})),
              1e-10);
  }
  const TorusGrid g2 = make_grid(2, 4);
  const DiscreteField w = random_real_field(g2, rng);
  EXPECT_LT(max_abs_diff(semenov_rearrange(semenov_rearrange(w, {1, 2, 0}), {-1, -2, 0}), w), 1e-12);
  // Translating the Haar part keeps the mean.
  EXPECT_NEAR(std::abs(mean(semenov_rearrange(w, {3, 1, 0})) - mean(w)), 0.0, 1e-13);
}

TEST(Semenov, DenseNormIsOne) {
  const TorusGrid g = make_grid(1, 7);
  for (int mu : {1, 5, 16}) {
    const auto e = op_norm(semenov_operator(g, {mu, 0, 0}), 2.0);
    ASSERT_TRUE(e.certified.has_value());
    EXPECT_NEAR(*e.certified, 1.0, 1e-10);
    EXPECT_LE(e.lower, *e.certified + 1e-12);
  }
}

TEST(BlockBasis, IdentityLikeAndZero) {
  auto phi = system("db4", 1, 8);
  const Direction e = make_direction(1, {1, 0, 0});
  const BlockCoefficients delta = [](const DyadicCube& K, const DyadicCube& Q) {
    return cdouble(K.index == Q.index && K.j == Q.j ? 1.0 : 0.0);
  };
  auto s0 = std::make_shared<const BlockBasis>(phi, phi, delta, 3, 0, e);
  const auto est = op_norm(block_basis_operator(s0, phi->grid()), 2.0);
  EXPECT_NEAR(est.value(), 1.0, 1e-9);
  // With c = delta the operator is the projection onto the scale-3 wavelets.
  Rng rng(47);
  const DiscreteField u = random_real_field(phi->grid(), rng);
  EXPECT_LT(max_abs_diff(s0->apply(u), phi->project(u, e, ScaleRange{3, 3})), 1e-10);

  const BlockBasis zero(phi, phi, [](const DyadicCube&, const DyadicCube&) { return cdouble{}; }, 3, 1, e);
  EXPECT_EQ(max_abs(zero.apply(u)), 0.0);
  EXPECT_THROW(BlockBasis(phi, phi, [](const DyadicCube&, const DyadicCube&) { return cdouble(2.0); }, 3, 1, e),
               DomainError);
}

// Oracle: in the orthonormal bases phi_Q/sqrt|Q|, psi_K/sqrt|K| the operator is
// the matrix c_K(Q) sqrt(|K|/|Q|), whose top singular value is ||S0||_2.
TEST(BlockBasis, NormMatchesDenseSvd) {
  auto phi = system("db4", 1, 8);
  auto psi = system("db6", 1, 8);
  const Direction e = make_direction(1, {1, 0, 0});
  const TorusGrid& g = phi->grid();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const int j = 3, k = 2;
    const auto qs = cubes_at_scale(g, j);
    const auto ks = cubes_at_scale(g, j + k);
    Rng rng(480 + seed);
    Eigen::MatrixXd raw(static_cast<Eigen::Index>(ks.size()), static_cast<Eigen::Index>(qs.size()));
    for (Eigen::Index r = 0; r < raw.rows(); ++r)
      for (Eigen::Index c = 0; c < raw.cols(); ++c) raw(r, c) = rng.uniform(-1.0, 1.0);
    const BlockCoefficients coeff = [&](const DyadicCube& K, const DyadicCube& Q) {
      const double w = decay_weight(dist(K, Q), Q.side(), 1, 1.0);
      return cdouble(raw(K.index[0], Q.index[0]) * w);
    };
    Eigen::MatrixXd M(raw.rows(), raw.cols());
    for (const auto& K : ks)
      for (const auto& Q : qs)
        M(K.index[0], Q.index[0]) = coeff(K, Q).real() * std::sqrt(K.volume() / Q.volume());
    const double svd = Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0);

    auto s0 = std::make_shared<const BlockBasis>(phi, psi, coeff, j, k, e);
    const auto op = block_basis_operator(s0, g);
    EXPECT_NEAR(op_norm(op, 2.0).value(), svd, 0.05 * svd);
    Budget iterative;
    iterative.dense_limit = 0;
    const auto it = op_norm(op, 2.0, iterative);
    EXPECT_EQ(it.method, "power-iteration");
    EXPECT_NEAR(it.value(), svd, 0.05 * svd);

    const DiscreteField u = random_real_field(g, rng), v = random_real_field(g, rng);
    EXPECT_NEAR(std::abs(inner(s0->apply(u), v) - inner(u, s0->adjoint(v))), 0.0, 1e-12);
  }
}

TEST(Predecessor, LambdaZeroIsWaveletProjection) {
  auto sys = system("db4", 1, 8);
  const Direction e = make_direction(1, {1, 0, 0});
  const PredecessorRearrangement s(sys, 0, KernelFamily::from_wavelets(sys, e), e);
  Rng rng(49);
  for (int t = 0; t < 5; ++t) {
    const DiscreteField u = random_real_field(sys->grid(), rng);
    EXPECT_LT(max_abs_diff(s.apply(u), wavelet_projection(u, *sys, e)), 1e-9);
  }
  const PredecessorRearrangement z(sys, 2, KernelFamily::zero_family(), e);
  EXPECT_EQ(max_abs(z.apply(random_real_field(sys->grid(), rng))), 0.0);
}

// Direct expansion <S g, h> = sum_Q <g, F_tau(Q)> <phi_Q, h> / |Q| on a small
// grid, for both the analysis fast path and the generic member path.
TEST(Predecessor, AdjointShapedTransferOracle) {
  auto sys = system("db4", 1, 6);
  const TorusGrid& g = sys->grid();
  const Direction e = make_direction(1, {1, 0, 0});
  KernelFamily fast = KernelFamily::from_wavelets(sys, e);
  KernelFamily generic = fast;
  generic.wavelets.reset();
  Rng rng(50);
  for (int lambda : {1, 2}) {
    const DiscreteField gf = random_real_field(g, rng), hf = random_real_field(g, rng);
    cdouble oracle{};
    const ScaleRange act = sys->active_scales();
    for (int j = std::max(act.lo, lambda); j <= act.hi; ++j)
      for (const auto& q : cubes_at_scale(g, j))
        oracle += inner(gf, sys->atom(predecessor(q, lambda), e)) * inner(sys->atom(q, e), hf) / q.volume();
    for (const auto& fam : {fast, generic}) {
      const PredecessorRearrangement s(sys, lambda, fam, e);
      EXPECT_NEAR(std::abs(inner(s.apply(gf), hf) - oracle), 0.0, 1e-10 * (1.0 + std::abs(oracle)));
      EXPECT_NEAR(std::abs(inner(gf, s.adjoint(hf)) - oracle), 0.0, 1e-10 * (1.0 + std::abs(oracle)));
    }
  }
}

TEST(Predecessor, InvalidFamilyRejected) {
  auto sys = system("db4", 1, 8);
  const Direction e = make_direction(1, {1, 0, 0});
  KernelFamily bad = KernelFamily::from_wavelets(sys, e);
  bad.wavelets.reset();
  bad.member = [](std::size_t, const DyadicCube& w) {
    DiscreteField f(make_grid(1, 8));
    for (auto& v : f.values()) v = 1.0 + w.j;
    return f;
  };
  EXPECT_THROW(PredecessorRearrangement(sys, 1, bad, e), DomainError);
  const auto check = validate_kernel_family(KernelFamily::from_wavelets(sys, e), sys->grid(), 1, ScaleRange{2, 4});
  EXPECT_TRUE(check.pass) << check.note;
}

TEST(Predecessor, DenseNormsFollowEnvelope) {
  auto sys = system("db4", 1, 7);
  const Direction e = make_direction(1, {1, 0, 0});
  const auto r = scan_predecessor(sys, e, 2.0, {1, 2, 3}, Budget{});
  for (const auto& pt : r.points) {
    ASSERT_TRUE(pt.estimate.certified.has_value());
    EXPECT_LE(pt.estimate.value(), *r.c_fit * law_predecessor(pt.value, 1) * (1.0 + 1e-12));
  }
}
