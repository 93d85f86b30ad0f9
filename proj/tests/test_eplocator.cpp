#include <gtest/gtest.h>

#include <random>

#include "oqs/eplocator.hpp"
#include "test_support.hpp"

using namespace oqs;
using oqs::testing::I;

namespace {

SearchSpace fixture_eps2_space() {
  return direct_space({0.0, I, 0.5}, {DirectUnknown::eps2_re, DirectUnknown::eps2_im});
}

/// fixture_spec plus an uncoupled third level at 5 + i/2.
SystemSpec block_spec() {
  auto s = oqs::testing::fixture_spec();
  s.n_states = 3;
  s.diag_energies.push_back({5.0, 0.0, 1.0});
  for (auto& c : s.channels) c.w.push_back(0.0);
  return s;
}

/// Three levels coupled to two channels; both parameters enter non-trivially.
SystemSpec coupled_three_level() {
  SystemSpec s;
  s.n_states = 3;
  s.diag_energies = {{0.0, 1.0, 0.2}, {0.3, 0.0, 0.6}, {0.7, -1.0, 0.1}};
  s.channels = {{{1.0, 0.8, 0.5}, "L"}, {{0.4, -0.7, 1.0}, "R"}};
  return s;
}

std::array<SpecUnknown, 2> a_and(SpecUnknown::Kind k, int ch = 0) {
  return {SpecUnknown{SpecUnknown::a, 0}, SpecUnknown{k, ch}};
}

} // namespace

TEST(Discriminant, Examples) {
  EXPECT_EQ(discriminant_2x2(0.0, I, 0.5), cplx(0.0));
  EXPECT_EQ(discriminant_2x2(2.0, cplx(0.5, 1.0), 0.0), (cplx(1.5, -1.0) * cplx(1.5, -1.0)));
  EXPECT_NEAR(std::abs(discriminant_2x2(1.0, 0.0, 0.3) - 1.36), 0.0, 1e-15);
}

TEST(Discriminant, MatchesSolverGap) {
  CMatrix h(2, 2);
  h << 1.0, 0.3, 0.3, 0.0;
  auto es = eigendecompose(h);
  EXPECT_NEAR(std::abs(es.value(0) - es.value(1)) / 2.0, std::sqrt(1.36) / 2.0, 1e-12);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 50; ++t) {
    const cplx e1{nd(rng), nd(rng)}, e2{nd(rng), nd(rng)}, w{nd(rng), nd(rng)};
    h << e1, w, w, e2;
    es = eigendecompose(h);
    EXPECT_NEAR(std::abs(es.value(0) - es.value(1)), std::sqrt(std::abs(discriminant_2x2(e1, e2, w))), 1e-10);
  }
}

TEST(FindEp2x2, Eps2ConvergesToI) {
  auto c = find_ep_2x2(fixture_eps2_space(), {0.0, 0.9});
  EXPECT_NEAR(c.unknowns[0], 0.0, 1e-8);
  EXPECT_NEAR(c.unknowns[1], 1.0, 1e-8);
  EXPECT_TRUE(c.verified);
  ASSERT_TRUE(c.encircle_permutation);
  EXPECT_TRUE(is_transposition(*c.encircle_permutation, 0, 1));
  EXPECT_NEAR(std::abs(c.eigenvalue - 0.5 * I), 0.0, 1e-8);
}

TEST(FindEp2x2, OmegaRootPerBasin) {
  auto space = direct_space({0.0, I, 0.0}, {DirectUnknown::omega_re, DirectUnknown::omega_im});
  auto plus = find_ep_2x2(space, {0.4, 0.0});
  auto minus = find_ep_2x2(space, {-0.4, 0.0});
  EXPECT_NEAR(plus.unknowns[0], 0.5, 1e-8);
  EXPECT_NEAR(minus.unknowns[0], -0.5, 1e-8);
  EXPECT_NEAR(plus.unknowns[1], 0.0, 1e-8);
  EXPECT_NEAR(minus.unknowns[1], 0.0, 1e-8);
  EXPECT_TRUE(plus.verified);
  EXPECT_TRUE(minus.verified);
}

TEST(FindEp2x2, RealSliceHasNoRoot) {
  // D = (eps1 - eps2)^2 + 0.36 >= 0.36 for real eps1, eps2
  auto space = direct_space({1.0, 0.0, 0.3}, {DirectUnknown::eps1_re, DirectUnknown::eps2_re});
  EXPECT_THROW(find_ep_2x2(space, {0.2, 0.1}), SearchError);
}

TEST(FindEp2x2, RealSeedOutsideNewtonBasin) {
  // D = eps2^2 + 1 is holomorphic in eps2: Newton from a real seed never leaves
  // the real axis, the boundary between the basins of +i and -i.
  try {
    find_ep_2x2(fixture_eps2_space(), {0.5, 0.0});
    FAIL() << "expected SearchError";
  } catch (const SearchError& e) {
    EXPECT_EQ(e.last(1), 0.0);
  }
}

TEST(FindEp2x2, SpecModeFixture) {
  auto space = spec_space(oqs::testing::fixture_spec(), oqs::testing::fixture_point(),
                          a_and(SpecUnknown::omega_im));
  auto c = find_ep_2x2(space, {0.05, 0.45});
  EXPECT_NEAR(c.unknowns[0], 0.0, 1e-8);
  EXPECT_NEAR(c.unknowns[1], 0.5, 1e-8);
  EXPECT_TRUE(c.verified);
  ASSERT_TRUE(c.point);
  EXPECT_NEAR(std::abs(c.point->omegas[0] - 0.5 * I), 0.0, 1e-8);
}

TEST(FindEpNd, AgreesWith2x2OnFixture) {
  auto space = fixture_eps2_space();
  auto a = find_ep_2x2(space, {0.05, 0.9});
  auto b = find_ep_nd(space, {0, 1}, {0.05, 0.9});
  EXPECT_NEAR(a.unknowns[0], b.unknowns[0], 1e-6);
  EXPECT_NEAR(a.unknowns[1], b.unknowns[1], 1e-6);
  EXPECT_TRUE(b.verified);
}

TEST(FindEpNd, AgreesWith2x2OnRandomMatrices) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 12; ++t) {
    const cplx e1{nd(rng), nd(rng)}, w{nd(rng), nd(rng)};
    const cplx root = e1 + 2.0 * I * w; // D(eps2) = 0
    auto space = direct_space({e1, 0.0, w}, {DirectUnknown::eps2_re, DirectUnknown::eps2_im});
    const Vec2 seed{root.real() + 0.05 * nd(rng), root.imag() + 0.05 * nd(rng)};
    auto a = find_ep_2x2(space, seed);
    auto b = find_ep_nd(space, {0, 1}, seed);
    EXPECT_NEAR(a.unknowns[0], root.real(), 1e-8) << t;
    EXPECT_NEAR(a.unknowns[1], root.imag(), 1e-8) << t;
    EXPECT_NEAR(a.unknowns[0], b.unknowns[0], 1e-6) << t;
    EXPECT_NEAR(a.unknowns[1], b.unknowns[1], 1e-6) << t;
    EXPECT_TRUE(a.verified);
    EXPECT_TRUE(b.verified);
  }
}

TEST(FindEpNd, BlockEmbeddingLeavesThirdLevelUntouched) {
  const auto spec = block_spec();
  auto space = spec_space(spec, oqs::testing::fixture_point(), a_and(SpecUnknown::omega_im));
  auto c = find_ep_nd(space, {0, 1}, {0.05, 0.45});
  EXPECT_NEAR(c.unknowns[0], 0.0, 1e-6);
  EXPECT_NEAR(c.unknowns[1], 0.5, 1e-6);
  EXPECT_TRUE(c.verified);
  auto es = eigendecompose(build_hamiltonian(spec, *c.point));
  EXPECT_EQ(es.value(2), cplx(5.0, 0.5));
  EXPECT_NEAR(std::abs(c.eigenvalue - 0.5 * I), 0.0, 1e-6);
}

TEST(FindEpNd, CoupledThreeLevelEp) {
  const auto spec = coupled_three_level();
  auto space = spec_space(spec, {0.3, {0.3, 0.2}}, a_and(SpecUnknown::omega_re));
  auto c = find_ep_nd(space, {1, 2}, {0.3, 0.3});
  EXPECT_LE(c.min_gap, 1e-7);
  EXPECT_LE(c.self_orth, 1e-6);
  EXPECT_TRUE(c.verified);
  ASSERT_TRUE(c.encircle_permutation);
  EXPECT_FALSE(is_identity(*c.encircle_permutation));

  // the coalescing pair agrees within the gap tolerance and the residual
  // contract holds at the candidate
  auto es = eigendecompose(build_hamiltonian(spec, *c.point));
  auto g = min_gap(es);
  EXPECT_LE(g.gap, 10.0 * EpOptions{}.ep_gap_tol * es.h_norm);
  for (double r : es.residuals) EXPECT_LE(r, 1e-10 * es.h_norm);

  // an independent loop of a different size agrees on the monodromy
  auto wide = encircle(space, c.unknowns, 0.02, 200);
  EXPECT_EQ(wide.permutation, *c.encircle_permutation);
}

TEST(FindEpNd, Errors) {
  auto space = fixture_eps2_space();
  EXPECT_THROW(find_ep_nd(space, {0, 0}, {0.0, 0.9}), SpecError);
  EXPECT_THROW(find_ep_nd(space, {0, 2}, {0.0, 0.9}), SpecError);
  // real slice: the pair never coalesces
  auto real = direct_space({1.0, 0.0, 0.3}, {DirectUnknown::eps1_re, DirectUnknown::eps2_re});
  EXPECT_THROW(find_ep_nd(real, {0, 1}, {0.2, 0.4}), SearchError);
}

TEST(Encircle, FixtureSwapAndTwiceIdentity) {
  auto space = fixture_eps2_space();
  auto once = encircle(space, {0.0, 1.0}, 0.2, 400);
  EXPECT_TRUE(is_transposition(once.permutation, 0, 1));
  EXPECT_EQ(once.trajectories.n_points(), 401);
  auto twice = encircle(space, {0.0, 1.0}, 0.2, 400, 2);
  EXPECT_TRUE(is_identity(twice.permutation));
  for (int k = 1; k <= 4; ++k) {
    auto r = encircle(space, {0.0, 1.0}, 0.2, 100, k);
    EXPECT_EQ(is_identity(r.permutation), k % 2 == 0) << k;
  }
}

TEST(Encircle, NonEpPointIsIdentity) {
  auto r = encircle(fixture_eps2_space(), {3.0, 0.0}, 0.2, 100);
  EXPECT_TRUE(is_identity(r.permutation));
}

TEST(Encircle, Errors) {
  auto space = fixture_eps2_space();
  EXPECT_THROW(encircle(space, {0.0, 1.0}, 0.0, 100), SpecError);
  EXPECT_THROW(encircle(space, {0.0, 1.0}, 0.2, 8), SpecError);
  EXPECT_THROW(encircle(space, {0.0, 1.0}, 0.2, 100, 0), SpecError);
  // a loop passing exactly through the EP cannot be tracked
  EXPECT_THROW(encircle(space, {0.0, 0.8}, 0.2, 64), EncircleError);
}

TEST(Unknowns, ParseAndApply) {
  EXPECT_EQ(parse_direct_unknown("omega.im"), DirectUnknown::omega_im);
  EXPECT_FALSE(parse_direct_unknown("omega"));
  auto u = parse_spec_unknown("omega[1].re");
  ASSERT_TRUE(u);
  EXPECT_EQ(u->kind, SpecUnknown::omega_re);
  EXPECT_EQ(u->channel, 1);
  EXPECT_EQ(to_string(*u), "omega[1].re");
  EXPECT_FALSE(parse_spec_unknown("omega[].re"));
  EXPECT_FALSE(parse_spec_unknown("omega[0].x"));
  EXPECT_FALSE(parse_spec_unknown("b"));

  std::array<SpecUnknown, 2> us{SpecUnknown{SpecUnknown::a, 0}, SpecUnknown{SpecUnknown::omega_im, 1}};
  auto p = apply_unknowns({0.0, {1.0, cplx(2.0, 3.0)}}, us, {0.7, -1.0});
  EXPECT_EQ(p.a, 0.7);
  EXPECT_EQ(p.omegas[1], cplx(2.0, -1.0));
  EXPECT_EQ(extract_unknowns(p, us), (Vec2{0.7, -1.0}));
  EXPECT_THROW(direct_space({}, {DirectUnknown::eps1_re, DirectUnknown::eps1_re}), SpecError);
}

TEST(SearchSpace, DerivativeMatchesFiniteDifference) {
  const auto spec = coupled_three_level();
  for (auto kind : {SpecUnknown::omega_re, SpecUnknown::omega_im}) {
    auto space = spec_space(spec, {0.3, {0.3, 0.2}}, a_and(kind, 1));
    const Vec2 x{0.2, -0.4};
    auto d = space.derivative(x);
    for (int j = 0; j < 2; ++j) {
      Vec2 xp = x, xm = x;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      const CMatrix fd = (space.matrix(xp) - space.matrix(xm)) / 2e-6;
      EXPECT_LT((fd - d[j]).norm(), 1e-8);
    }
  }
}
