#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "helpers.hpp"

using namespace oscillab;
using testing_util::max_diff;

namespace {

std::uint64_t lcm_of(std::initializer_list<int> v) {
  std::uint64_t r = 1;
  for (int x : v) r = std::lcm(r, static_cast<std::uint64_t>(x));
  return r;
}

}  // namespace

TEST(Classify, Examples) {
  EXPECT_EQ(classify(make_signature({1, 1, 1})).kind, OscillatorKind::isotropic);
  EXPECT_FALSE(classify(make_signature({1, 1, 1})).subtype);

  const OscillatorClass c = classify(make_signature({2, 3, 5}));
  EXPECT_EQ(c.kind, OscillatorKind::canonical);
  EXPECT_FALSE(c.subtype);

  const OscillatorClass n = classify(make_signature({2, 6, 3}));
  EXPECT_EQ(n.kind, OscillatorKind::non_canonical);
  ASSERT_TRUE(n.subtype);
  EXPECT_EQ(*n.subtype, "type2");
  EXPECT_EQ(n.gcd_matrix[0][1], 2);
  EXPECT_EQ(n.gcd_matrix[1][2], 3);
  EXPECT_EQ(n.gcd_matrix[0][2], 1);
}

TEST(Classify, SubtypesByPairCount) {
  EXPECT_EQ(*classify(make_signature({4, 2, 9})).subtype, "type1");
  EXPECT_EQ(*classify(make_signature({6, 10, 15})).subtype, "type3");
  EXPECT_FALSE(classify(make_signature({2, 4, 3, 5})).subtype);
  EXPECT_EQ(classify(make_signature({2, 4, 3, 5})).kind, OscillatorKind::non_canonical);
}

TEST(Classify, TwoModeCases) {
  EXPECT_EQ(classify(make_signature({1, 2})).kind, OscillatorKind::canonical);
  EXPECT_EQ(classify(make_signature({2, 4})).kind, OscillatorKind::canonical);  // normalized to (1, 2)
  EXPECT_EQ(classify(make_signature({1, 1})).kind, OscillatorKind::isotropic);
}

TEST(Classify, InvariantUnderPermutationAndScaling) {
  std::vector<int> m = {2, 6, 3};
  const OscillatorClass ref = classify(make_signature(m, 1.0));
  std::sort(m.begin(), m.end());
  do {
    for (int scale : {1, 2, 7}) {
      std::vector<int> scaled;
      for (int v : m) scaled.push_back(v * scale);
      const OscillatorClass c = classify(make_signature(scaled, 1.0));
      EXPECT_EQ(c.kind, ref.kind);
      EXPECT_EQ(c.subtype, ref.subtype);
    }
  } while (std::next_permutation(m.begin(), m.end()));
}

TEST(Census, CanonicalThreeModes) {
  const PeriodCensus c = period_census(make_signature({2, 3, 5}));
  EXPECT_EQ(c.periods.size(), 7u);
  EXPECT_EQ(c.distinct_count(), 7u);
  EXPECT_EQ(c.revolutions, 30u);
  EXPECT_EQ(c.winding, (std::vector<std::uint64_t>{15, 10, 6}));
  std::set<std::uint64_t> got;
  for (const auto& p : c.periods) {
    got.insert(p.lcm);
    EXPECT_NEAR(p.period, 2 * kPi * static_cast<double>(p.lcm), 1e-12);
  }
  EXPECT_EQ(got, (std::set<std::uint64_t>{2, 3, 5, 6, 10, 15, 30}));
}

TEST(Census, Isotropic) {
  const PeriodCensus c = period_census(make_signature({1, 1}));
  EXPECT_EQ(c.periods.size(), 3u);
  EXPECT_EQ(c.distinct_count(), 1u);
  for (const auto& p : c.periods) EXPECT_NEAR(p.period, 2 * kPi, 1e-15);
}

TEST(Census, NonCanonical) {
  const PeriodCensus c = period_census(make_signature({2, 6, 3}));
  EXPECT_EQ(c.revolutions, lcm_of({2, 6, 3}));
  EXPECT_EQ(c.revolutions, 6u);
}

TEST(Census, OmegaScalesPeriods) {
  const PeriodCensus c = period_census(make_signature({2, 3}, 4.0));
  EXPECT_NEAR(c.periods.back().period, 2 * kPi * 6 / 4.0, 1e-12);
}

TEST(Census, WindingNumbers) {
  for (const auto& s : {make_signature({2, 3, 5}), make_signature({2, 6, 3}), make_signature({4, 6, 9, 10})}) {
    const PeriodCensus c = period_census(s);
    std::uint64_t g = 0;
    for (std::size_t n = 0; n < s.dim(); ++n) {
      EXPECT_EQ(c.winding[n] * static_cast<std::uint64_t>(s.m(n)), c.revolutions);
      g = std::gcd(g, c.winding[n]);
    }
    EXPECT_EQ(g, 1u);
  }
}

TEST(Census, DistinctCountForCanonicalSignatures) {
  for (const auto& s : {make_signature({2, 3, 5, 7}), make_signature({3, 4, 5}), make_signature({5, 7})}) {
    EXPECT_EQ(period_census(s).distinct_count(), (std::size_t{1} << s.dim()) - 1);
  }
  EXPECT_EQ(period_census(make_signature({1, 1, 1, 1})).distinct_count(), 1u);
}

TEST(Census, DimensionCap) {
  std::vector<int> m(21, 1);
  EXPECT_THROW(period_census(make_signature(m, 1.0)), LimitExceeded);
}

TEST(Census, PeriodsAreMinimalReturnTimes) {
  std::mt19937_64 rng(3);
  for (const auto& s : {make_signature({2, 3, 5}), make_signature({2, 6, 3})}) {
    for (const auto& e : period_census(s).periods) {
      for (int k = 0; k < 5; ++k) {
        PhasePoint x = testing_util::random_point(rng, s.dim());
        for (std::size_t n = 0; n < s.dim(); ++n)
          if (std::find(e.subset.begin(), e.subset.end(), n) == e.subset.end()) x.alpha(static_cast<Eigen::Index>(n)) = 0.0;
        EXPECT_LT(max_diff(evolve_time(x, s, e.period).alpha, x.alpha), 1e-9);
        // no proper divisor of the lcm brings the point back
        for (std::uint64_t d = 1; d < e.lcm; ++d) {
          if (e.lcm % d) continue;
          EXPECT_GT(max_diff(evolve_time(x, s, 2 * kPi * static_cast<double>(d) / s.omega()).alpha, x.alpha), 1e-3);
        }
      }
    }
  }
}

TEST(Subsystem, Examples) {
  const Subsystem a = subsystem(make_signature({2, 6, 3}), {0, 1});
  EXPECT_EQ(a.divisor, 2);
  EXPECT_EQ(a.m_prime, (std::vector<int>{1, 3}));

  const Subsystem b = subsystem(make_signature({4, 6, 9}), {1, 0});
  EXPECT_EQ(b.divisor, 2);
  EXPECT_EQ(b.m_prime, (std::vector<int>{2, 3}));
  EXPECT_EQ(b.subset, (std::vector<std::size_t>{0, 1}));

  const auto s = make_signature({2, 3, 5});
  const Subsystem c = subsystem(s, {0, 2});
  EXPECT_EQ(c.divisor, 1);
  std::mt19937_64 rng(4);
  const PhasePoint x = testing_util::random_point(rng, 3);
  const ReducedPoint full = reduce(x, s), part = c.reduce(x);
  EXPECT_EQ(part.beta(0), full.beta(0));
  EXPECT_EQ(part.beta(1), full.beta(2));
}

TEST(Subsystem, Errors) {
  EXPECT_THROW(subsystem(make_signature({2, 6, 3}), {1}), Error);
  EXPECT_THROW(subsystem(make_signature({2, 6, 3}), {1, 1}), Error);
  EXPECT_THROW(subsystem(make_signature({2, 6, 3}), {0, 3}), IndexOutOfRange);
}

TEST(Nonclosure, NonCanonicalPairLeavesTheSpan) {
  const NonclosureReport r = nonclosure_check(make_signature({2, 6, 3}), {0, 1});
  EXPECT_EQ(r.sub.divisor, 2);
  EXPECT_GT(r.fit_residual, 1e-3);
  EXPECT_TRUE(r.nonclosure);
  EXPECT_LT(r.energy_residual, 1e-8);
  EXPECT_FALSE(r.worst_bracket.empty());
}

TEST(Nonclosure, CanonicalPairCloses) {
  const NonclosureReport r = nonclosure_check(make_signature({2, 3, 5}), {0, 1});
  EXPECT_EQ(r.sub.divisor, 1);
  EXPECT_LT(r.fit_residual, 1e-8);
  EXPECT_FALSE(r.nonclosure);
  EXPECT_LT(r.energy_residual, 1e-8);
}

TEST(Nonclosure, IsotropicSubsystemIsPolynomial) {
  const auto s = make_signature({2, 2, 3});
  const NonclosureReport r = nonclosure_check(s, {0, 1});
  EXPECT_EQ(r.sub.m_prime, (std::vector<int>{1, 1}));
  EXPECT_LT(r.energy_residual, 1e-8);
  // J'_12 = conj(alpha_1) alpha_2, so central differences are exact up to rounding
  std::mt19937_64 rng(5);
  const PhaseFunction jp = r.sub.j_prime(0, 1);
  const PhaseFunction ham = observables::hamiltonian(s);
  for (int k = 0; k < 20; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 3);
    EXPECT_NEAR(std::abs(jp.eval(x) - std::conj(x.alpha(0)) * x.alpha(1)), 0.0, 1e-15);
    EXPECT_LT(std::abs(bracket(ham, jp, x, 1e-3, false)), 1e-10);
  }
}

TEST(Nonclosure, PrimedInvariantsAreConserved) {
  std::mt19937_64 rng(6);
  const auto s = make_signature({4, 6, 9});
  const Subsystem sub = subsystem(s, {0, 1});
  const PhaseFunction ham = observables::hamiltonian(s);
  for (int k = 0; k < 100; ++k) {
    const PhasePoint x = testing_util::random_point(rng, 3, 0.1, 2.0);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t b = 0; b < 2; ++b) EXPECT_LT(std::abs(bracket(ham, sub.j_prime(a, b), x)), 1e-8);
  }
}

TEST(Nonclosure, DeterministicAcrossJobs) {
  NonclosureOptions a, b;
  b.jobs = 3;
  const auto s = make_signature({2, 6, 3});
  EXPECT_EQ(nonclosure_check(s, {0, 1}, a).fit_residual, nonclosure_check(s, {0, 1}, b).fit_residual);
}
