#include <cmath>
#include <numbers>

#include "helpers.hpp"

using namespace oscillab;
using testing_util::max_diff;

namespace {

const double kPiD = std::numbers::pi;
const Complex kI(0.0, 1.0);

double vec_diff(const Vec3& a, const Vec3& b) { return norm(a - b); }

}  // namespace

TEST(EvolveTime, Examples) {
  const auto s = make_signature({1, 2});
  const PhasePoint x = make_point({1.0, 1.0});
  EXPECT_EQ(max_diff(evolve_time(x, s, 0.0).alpha, x.alpha), 0.0);
  EXPECT_LT(max_diff(evolve_time(x, s, 4 * kPiD).alpha, x.alpha), 1e-14);
  EXPECT_LT(max_diff(evolve_time(x, s, 2 * kPiD).alpha, make_point({1.0, -1.0}).alpha), 1e-14);
}

TEST(Generator, Validation) {
  EXPECT_THROW(Generator::direction({1.0, 1.0, 0.0}), Error);
  CMatrix a(2, 2);
  a << 1.0, kI, kI, 0.0;
  EXPECT_THROW(Generator::hermitean(a), Error);
  EXPECT_THROW(Generator::diagonal(3, 2), IndexOutOfRange);
  for (const auto& g : {Generator::symmetric(4, 0, 2), Generator::antisymmetric(4, 3, 1), Generator::diagonal(4, 1)}) {
    EXPECT_LT(std::abs(g.matrix().trace()), 1e-15);
    EXPECT_LT((g.matrix() - g.matrix().adjoint()).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Generator, PauliCombinationsMatchTwoModeEntries) {
  // J1 = J^s_12, J2 = J^a_12, J3 = J^d_1 for two modes
  EXPECT_LT((Generator::symmetric(2, 0, 1).matrix() - 0.5 * observables::pauli(1)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((Generator::antisymmetric(2, 0, 1).matrix() - 0.5 * observables::pauli(2)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((Generator::diagonal(2, 0).matrix() - 0.5 * observables::pauli(3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FlowReduced, ZeroIsIdentity) {
  const ReducedPoint b = make_reduced({0.3, Complex(0.1, 0.4)});
  EXPECT_LT(max_diff(flow_reduced(b, Generator::direction({0.0, 0.6, 0.8}), 0.0).beta, b.beta), 1e-15);
}

TEST(FlowReduced, HalfTurnAboutE1) {
  const ReducedPoint r = flow_reduced(make_reduced({1.0, 0.0}), Generator::direction({1.0, 0.0, 0.0}), kPiD);
  EXPECT_LT(max_diff(r.beta, make_reduced({0.0, -kI}).beta), 1e-15);
}

TEST(FlowReduced, SpinorPeriod) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const ReducedPoint b = testing_util::random_reduced(rng, 2);
    const Vec3 n = testing_util::random_unit(rng);
    EXPECT_LT(max_diff(flow_reduced(b, Generator::direction(n), 4 * kPiD).beta, b.beta), 1e-10);
    EXPECT_LT(max_diff(flow_reduced(b, Generator::direction(n), 2 * kPiD).beta, -b.beta), 1e-10);
  }
}

TEST(FlowReduced, HermiteanKindAgreesWithSpecialKinds) {
  std::mt19937_64 rng(2);
  const ReducedPoint b = testing_util::random_reduced(rng, 2);
  const Vec3 n = testing_util::random_unit(rng);
  const double tau = 1.37;
  EXPECT_LT(max_diff(flow_reduced(b, Generator::hermitean(Generator::direction(n).matrix()), tau).beta,
                     flow_reduced(b, Generator::direction(n), tau).beta),
            1e-13);
  EXPECT_LT(max_diff(flow_reduced(b, Generator::hermitean(Generator::j3().matrix()), tau).beta,
                     flow_reduced(b, Generator::j3(), tau).beta),
            1e-13);
  EXPECT_LT(max_diff(flow_reduced(b, Generator::hermitean(Generator::j0().matrix()), tau).beta,
                     std::polar(1.0, -0.5 * tau) * b.beta),
            1e-13);
}

TEST(FlowReduced, DimensionMismatch) {
  EXPECT_THROW(flow_reduced(make_reduced({1.0, 0.0, 0.0}), Generator::j3(), 1.0), DimensionMismatch);
}

TEST(FlowUpsilon, OwnAxisIsFixed) {
  const InvariantSet inv = invariant_set(make_reduced({0.6, Complex(0.3, -0.2)}));
  const Vec3 axis = unit(*inv.jvec);
  const InvariantSet r = flow_upsilon(inv, axis, 2.1);
  EXPECT_LT(vec_diff(*r.jvec, *inv.jvec), 1e-14);
}

TEST(FlowUpsilon, QuarterTurnAboutE3) {
  // dJ/dtau = {J, J3} = e3 x J carries e1 into e2
  const InvariantSet r = flow_upsilon(InvariantSet::from_four_vector(0.5, {0.5, 0.0, 0.0}), {0.0, 0.0, 1.0}, kPiD / 2);
  EXPECT_LT(vec_diff(*r.jvec, {0.0, 0.5, 0.0}), 1e-15);
  EXPECT_EQ(r.j0, 0.5);
}

TEST(FlowUpsilon, FullTurnAndConservation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tau(-10.0, 10.0);
  for (int k = 0; k < 50; ++k) {
    const InvariantSet inv = invariant_set(testing_util::random_reduced(rng, 2));
    const Vec3 n = testing_util::random_unit(rng);
    EXPECT_LT(vec_diff(*flow_upsilon(inv, n, 2 * kPiD).jvec, *inv.jvec), 1e-12);
    const InvariantSet r = flow_upsilon(inv, n, tau(rng));
    EXPECT_NEAR(norm(*r.jvec), norm(*inv.jvec), 1e-12);
    EXPECT_EQ(r.j0, inv.j0);
    EXPECT_LT(cone_residual(r), 1e-12);
  }
}

TEST(FlowUpsilon, MatchesReducedFlow) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> tau(-10.0, 10.0);
  for (int k = 0; k < 100; ++k) {
    const ReducedPoint b = testing_util::random_reduced(rng, 2);
    const Vec3 n = testing_util::random_unit(rng);
    const double t = tau(rng);
    const InvariantSet lhs = invariant_set(flow_reduced(b, Generator::direction(n), t));
    const InvariantSet rhs = flow_upsilon(invariant_set(b), n, t);
    EXPECT_LT(vec_diff(*lhs.jvec, *rhs.jvec), 1e-10);
    EXPECT_NEAR(lhs.j0, rhs.j0, 1e-10);
  }
}

TEST(CommutingSquare, TimeEvolutionIsTheJ0Flow) {
  std::mt19937_64 rng(5);
  const auto s = make_signature({2, 3}, 1.3);
  for (int k = 0; k < 50; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 2);
    const double t = 0.37 * k;
    const ReducedPoint lhs = reduce(evolve_time(x, s, t), s);
    const ReducedPoint rhs = flow_reduced(reduce(x, s), Generator::j0(), 2 * s.omega() * t);
    EXPECT_LT(max_diff(lhs.beta, rhs.beta), 1e-10);
  }
}

TEST(GammaField, ClosedFormMatchesDifferences) {
  std::mt19937_64 rng(6);
  for (const auto& s : {make_signature({1, 2}), make_signature({2, 3, 5})}) {
    for (int k = 0; k < 20; ++k) {
      const PhasePoint x = testing_util::random_point(rng, s.dim());
      CMatrix a = CMatrix::Random(static_cast<Eigen::Index>(s.dim()), static_cast<Eigen::Index>(s.dim()));
      a = 0.5 * (a + a.adjoint()).eval();
      EXPECT_LT(max_diff(gamma_field(x, s, a), gamma_field_fd(x, s, a)), 1e-7);
    }
  }
}

TEST(GammaField, NonFiniteOnPlaneWithDivisor) {
  const auto s = make_signature({1, 2});
  const CVector v = gamma_field(make_point({1.0, 0.0}), s, Generator::direction({1.0, 0.0, 0.0}).matrix());
  EXPECT_TRUE(std::isfinite(std::abs(v(0))));
  EXPECT_FALSE(std::isfinite(std::abs(v(1))));
}

TEST(FlowGamma, J0MatchesTimeEvolution) {
  const auto s = make_signature({1, 2});
  const PhasePoint x = make_point({1.0, 1.0});
  FlowOptions o;
  o.sample_dtau = 0.5;
  const GammaFlowResult r = flow_gamma(x, s, Generator::j0(), 20.0, o);
  ASSERT_FALSE(r.report.hit);
  for (std::size_t i = 0; i < r.trace.tau.size(); ++i) {
    const PhasePoint want = evolve_time(x, s, r.trace.tau[i] / (2 * s.omega()));
    EXPECT_LT(max_diff(r.trace.states[i], want.alpha), 1e-8);
    EXPECT_LT(r.trace.drift[i], 1e-9);
  }
  EXPECT_DOUBLE_EQ(r.trace.tau.back(), 20.0);
}

TEST(FlowGamma, J3MatchesClosedForm) {
  const auto s = make_signature({1, 2});
  std::mt19937_64 rng(7);
  for (int k = 0; k < 5; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 2);
    const GammaFlowResult r = flow_gamma(x, s, Generator::j3(), 4 * kPiD);
    ASSERT_FALSE(r.report.hit);
    for (std::size_t i = 0; i < r.trace.tau.size(); ++i) {
      const double t = r.trace.tau[i];
      // G = I1/(2 m1) - I2/(2 m2): each mode turns at its own constant rate
      CVector want(2);
      want << x.alpha(0) * std::polar(1.0, -t / (2.0 * s.m(0))), x.alpha(1) * std::polar(1.0, t / (2.0 * s.m(1)));
      EXPECT_LT(max_diff(r.trace.states[i], want), 1e-8);
    }
  }
}

TEST(FlowGamma, RegularOrbitCloses) {
  const auto s = make_signature({1, 2});
  const PhasePoint x = make_point({1.0, 1.0});
  const GammaFlowResult r = flow_gamma(x, s, Generator::direction({1.0, 0.0, 0.0}), 4 * kPiD * 1 * 2);
  ASSERT_FALSE(r.report.hit);
  EXPECT_LT(max_diff(r.trace.states.back(), x.alpha), 1e-6);
  double mod = 0.0, rec = 0.0;
  for (double v : r.trace.moduli_error) mod = std::max(mod, v);
  for (double v : r.trace.reconstruction_error) rec = std::max(rec, v);
  EXPECT_LT(mod, 1e-7);
  EXPECT_LT(rec, 1e-6);
  // a regular orbit of the 4 pi m1 m2 family winds each mode an integer number of times
  for (double phi : r.trace.unwrapped_angle) {
    const double turns = phi / (2 * kPiD);
    EXPECT_NEAR(turns, std::round(turns), 1e-6);
  }
}

TEST(FlowGamma, HitsThePlaneItApproachesFirst) {
  const auto s = make_signature({1, 2});
  const PhasePoint x = make_point({1.0, 1.0});
  // J = (0.70711, 0, 0.25) lies on a great circle through both poles when rotated about e2.
  // Rotation about +e2 lowers J3 first (south pole, I1 = 0); about -e2 raises it (north pole, I2 = 0).
  const double to_pole = std::acos(0.25 / 0.75);
  const GammaFlowResult south = flow_gamma(x, s, Generator::direction({0.0, 1.0, 0.0}), 2 * kPiD);
  ASSERT_TRUE(south.report.hit);
  EXPECT_EQ(*south.report.plane, 0u);
  EXPECT_LT(south.report.min_action, 1e-6);
  EXPECT_NEAR(south.report.tau_star, kPiD - to_pole, 5e-3);

  const GammaFlowResult north = flow_gamma(x, s, Generator::direction({0.0, -1.0, 0.0}), 2 * kPiD);
  ASSERT_TRUE(north.report.hit);
  EXPECT_EQ(*north.report.plane, 1u);
  EXPECT_NEAR(north.report.tau_star, to_pole, 5e-3);
  EXPECT_GT(north.report.tau_star, 0.0);
}

TEST(FlowGamma, TorusCollapseAtHit) {
  const auto s = make_signature({1, 2});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> theta(0.25 * kPiD, 0.75 * kPiD);
  for (int k = 0; k < 10; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 2);
    const SingularDirections d = singular_planes(x, s);
    for (std::size_t p = 0; p < 2; ++p) {
      const GammaFlowResult r = flow_gamma(x, s, Generator::direction(d.planes[p].direction(theta(rng))), 2 * kPiD);
      ASSERT_TRUE(r.report.hit);
      EXPECT_EQ(*r.report.plane, p);
      ASSERT_EQ(r.report.actions_at_hit.size(), 2u);
      const double small = r.report.actions_at_hit[p], other = r.report.actions_at_hit[1 - p];
      EXPECT_LE(small, 1e-6 * (1 + 1e-6));
      EXPECT_GT(other, 1e-6);
    }
  }
}

TEST(FlowGamma, DiagonalFlowsStayRegular) {
  const auto s = make_signature({1, 2});
  std::mt19937_64 rng(9);
  for (int k = 0; k < 5; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 2);
    EXPECT_FALSE(flow_gamma(x, s, Generator::j0(), 100.0).report.hit);
    EXPECT_FALSE(flow_gamma(x, s, Generator::j3(), 100.0).report.hit);
  }
}

TEST(FlowGamma, HermiteanGeneratorInThreeModes) {
  const auto s = make_signature({2, 3, 5});
  std::mt19937_64 rng(10);
  const PhasePoint x = testing_util::random_point(rng, 3);
  const Generator g = Generator::symmetric(3, 0, 2);
  const GammaFlowResult r = flow_gamma(x, s, g, 0.5);
  if (!r.report.hit) {
    const ReducedPoint want = flow_reduced(reduce(x, s), g, 0.5);
    EXPECT_LT(max_diff(reduce(PhasePoint{r.trace.states.back()}, s).beta, want.beta), 1e-8);
  }
  EXPECT_LT(r.trace.drift.back(), 1e-9);
}

TEST(FlowGamma, RejectsSingularStart) {
  EXPECT_THROW(flow_gamma(make_point({0.0, 1.0}), make_signature({1, 2}), Generator::j3(), 1.0), SingularInput);
}

TEST(FlowGamma, SamplesStrictlyIncrease) {
  FlowOptions o;
  o.sample_dtau = 0.25;
  const GammaFlowResult r = flow_gamma(make_point({1.0, 1.0}), make_signature({1, 2}), Generator::direction({1.0, 0.0, 0.0}), 3.0, o);
  ASSERT_EQ(r.trace.tau.size(), r.trace.drift.size());
  for (std::size_t i = 1; i < r.trace.tau.size(); ++i) EXPECT_GT(r.trace.tau[i], r.trace.tau[i - 1]);
  EXPECT_EQ(r.trace.tau.size(), 13u);
}

// One degree of freedom: the flow of sqrt(I) turns alpha at rate 1 / (2 sqrt(I)) and has no
// limit at the origin. The integrator must report the origin instead of stepping through it.
TEST(ToyFlow, SquareRootOfActionIsIllDefinedAtOrigin) {
  auto rhs = [](const CVector& y) {
    CVector f(1);
    f(0) = -kI * y(0) / (2.0 * std::abs(y(0)));
    return f;
  };
  CVector y0(1);
  y0(0) = Complex(0.0, 0.0);
  const auto step = detail::dopri_step(rhs, y0, rhs(y0), 0.1, 1e-10, 1e-10);
  EXPECT_FALSE(step.finite);

  // the field has unit-half modulus everywhere but its direction depends on how the origin is approached
  CVector a(1), b(1);
  a(0) = Complex(1e-12, 0.0);
  b(0) = Complex(-1e-12, 0.0);
  EXPECT_NEAR(std::abs(rhs(a)(0)), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(rhs(a)(0) + rhs(b)(0)), 0.0, 1e-15);
}

TEST(SingularPlanes, OneTwoExample) {
  const auto s = make_signature({1, 2});
  const SingularDirections d = singular_planes(make_point({1.0, 1.0}), s);
  EXPECT_NEAR(d.j0, 0.75, 1e-15);
  const SingularPlane& p1 = d.planes[0];
  EXPECT_EQ(p1.pole, -1);
  EXPECT_LT(vec_diff(p1.normal, {std::sqrt(0.5), 0.0, 1.0}), 1e-15);
  // (0, -1, 0) lies in the plane of P1
  const Vec3 n{0.0, -1.0, 0.0};
  EXPECT_NEAR(dot(n, p1.normal), 0.0, 1e-15);
  const double c0 = dot(n, p1.basis[0]), c1 = dot(n, p1.basis[1]);
  EXPECT_NEAR(c0 * c0 + c1 * c1, 1.0, 1e-15);
  // the rotated J sweeps a circle of radius 0.75 through the south pole
  double closest = 1e9;
  for (int k = 0; k < 4000; ++k) {
    const Vec3 j = *flow_upsilon(invariant_set(reduce(make_point({1.0, 1.0}), s)), n, 2 * kPiD * k / 4000).jvec;
    EXPECT_NEAR(norm(j), 0.75, 1e-12);
    closest = std::min(closest, vec_diff(j, {0.0, 0.0, -0.75}));
  }
  EXPECT_LT(closest, 2e-3);
}

TEST(SingularPlanes, EveryDirectionReachesItsPole) {
  std::mt19937_64 rng(11);
  const auto s = make_signature({2, 3});
  for (int k = 0; k < 20; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 2);
    const InvariantSet inv = invariant_set(reduce(x, s));
    const SingularDirections d = singular_planes(x, s);
    for (const auto& p : d.planes) {
      EXPECT_NEAR(dot(p.basis[0], p.basis[1]), 0.0, 1e-12);
      EXPECT_NEAR(norm(p.basis[0]), 1.0, 1e-12);
      EXPECT_NEAR(norm(p.basis[1]), 1.0, 1e-12);
      const Vec3 n = p.direction(0.3 + k);
      EXPECT_NEAR(dot(n, p.normal), 0.0, 1e-12);
      const Vec3 pole{0.0, 0.0, p.pole * inv.j0};
      // closest approach of the circle: rotate by the angle that brings J to the pole
      double best = 1e9;
      for (int t = 0; t < 2000; ++t) best = std::min(best, vec_diff(*flow_upsilon(inv, n, 2 * kPiD * t / 2000).jvec, pole));
      EXPECT_LT(best, 5e-3 * (1 + inv.j0));
    }
  }
}

TEST(SingularPlanes, E3IsNeverSingular) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 50; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 2);
    const SingularDirections d = singular_planes(x, make_signature({1, 2}));
    for (const auto& p : d.planes) EXPECT_GT(std::abs(dot(Vec3{0.0, 0.0, 1.0}, unit(p.normal))), 1e-6);
  }
}

TEST(SingularPlanes, DegenerateInputs) {
  EXPECT_THROW(singular_planes(InvariantSet::from_four_vector(1.0, {0.0, 0.0, 1.0})), SingularInput);
  EXPECT_THROW(singular_planes(make_point({0.0, 1.0}), make_signature({1, 2})), SingularInput);
}

TEST(LorentzBoost, Identity) {
  const ReducedPoint b = make_reduced({0.3, Complex(0.2, 0.1)});
  EXPECT_LT(max_diff(lorentz_boost(b, {0.0, 1.0, 0.0}, 0.0).beta.beta, b.beta), 1e-15);
}

TEST(LorentzBoost, AlongE3) {
  const double g = 0.7;
  const BoostResult r = lorentz_boost(make_reduced({1.0, 0.0}), {0.0, 0.0, 1.0}, g);
  EXPECT_NEAR(std::abs(r.beta.beta(0) - std::exp(g / 2)), 0.0, 1e-14);
  EXPECT_EQ(r.beta.beta(1), Complex(0.0, 0.0));
  EXPECT_NEAR(r.invariants.j0, std::exp(g) / 2, 1e-14);
  // dJ0/dgamma = J3 = J0 here
  const double h = 1e-5;
  const double d = (lorentz_boost(make_reduced({1.0, 0.0}), {0.0, 0.0, 1.0}, g + h).invariants.j0 -
                    lorentz_boost(make_reduced({1.0, 0.0}), {0.0, 0.0, 1.0}, g - h).invariants.j0) /
                   (2 * h);
  EXPECT_NEAR(d, (*r.invariants.jvec)[2], 1e-8);
}

TEST(LorentzBoost, StaysOnUpperCone) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> g(-1.5, 1.5);
  for (int k = 0; k < 100; ++k) {
    const BoostResult r = lorentz_boost(testing_util::random_reduced(rng, 2), testing_util::random_unit(rng), g(rng));
    EXPECT_LT(cone_residual(r.invariants), 1e-10);
    EXPECT_GT(r.invariants.j0, 0.0);
  }
}

TEST(Hopf, SphereAndFibers) {
  const auto s = make_signature({1, 2});
  const auto samples = hopf_sample(s, 1.5, 1000, 1);
  ASSERT_EQ(samples.size(), 1000u);
  double mean = 0.0;
  for (const auto& h : samples) {
    EXPECT_NEAR(norm(*h.invariants.jvec), 0.75, 1e-12);
    EXPECT_NEAR(h.invariants.j0, 0.75, 1e-12);
    for (int f = 0; f < 8; ++f) {
      const InvariantSet r = invariant_set(fiber_rotate(h.beta, 2 * kPiD * f / 8));
      EXPECT_LT(vec_diff(*r.jvec, *h.invariants.jvec), 1e-12);
    }
    mean += (*h.invariants.jvec)[2] / h.invariants.j0;
  }
  mean /= 1000.0;
  EXPECT_GE(mean, -0.08);
  EXPECT_LE(mean, 0.08);
}

TEST(Hopf, DeterministicInSeed) {
  const auto s = make_signature({1, 2});
  const auto a = hopf_sample(s, 2.0, 10, 99), b = hopf_sample(s, 2.0, 10, 99);
  for (std::size_t k = 0; k < 10; ++k) EXPECT_EQ(max_diff(a[k].beta.beta, b[k].beta.beta), 0.0);
  EXPECT_THROW(hopf_sample(s, -1.0, 1, 0), Error);
}

TEST(GroupCompose, SingleElement) {
  const ReducedPoint b = make_reduced({0.3, Complex(0.2, 0.1)});
  EXPECT_LT(group_compose_check({{{0.0, 0.6, 0.8}, 1.1}}, b), 1e-15);
}

TEST(GroupCompose, PauliProduct) {
  // U(e2, pi) U(e1, pi) = (-i sigma2)(-i sigma1) = i sigma3 = -U(e3, pi)
  const CMatrix prod = su2_rotation({0.0, 1.0, 0.0}, kPiD) * su2_rotation({1.0, 0.0, 0.0}, kPiD);
  EXPECT_LT((prod + su2_rotation({0.0, 0.0, 1.0}, kPiD)).cwiseAbs().maxCoeff(), 1e-12);
  const ReducedPoint b = make_reduced({0.6, Complex(-0.1, 0.5)});
  EXPECT_LT(group_compose_check({{{1.0, 0.0, 0.0}, kPiD}, {{0.0, 1.0, 0.0}, kPiD}}, b), 1e-12);
}

TEST(GroupCompose, RandomWords) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> tau(-10.0, 10.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<RotationWordElement> word;
    for (int e = 0; e < 5; ++e) word.push_back({testing_util::random_unit(rng), tau(rng)});
    EXPECT_LT(group_compose_check(word, testing_util::random_reduced(rng, 2)), 1e-10);
  }
}
