#pragma once

// Divisor structure of a signature: class labels, periods of the sub-orbits,
// subsystems with a common divisor removed, and the bracket non-closure test
// for the primed invariants of such a subsystem.

#include <Eigen/SVD>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oscillab/poisson.hpp"

namespace oscillab {

enum class OscillatorKind { isotropic, canonical, non_canonical };

inline std::string to_string(OscillatorKind k) {
  switch (k) {
    case OscillatorKind::isotropic: return "isotropic";
    case OscillatorKind::canonical: return "canonical";
    case OscillatorKind::non_canonical: return "non_canonical";
  }
  return "?";
}

struct OscillatorClass {
  OscillatorKind kind = OscillatorKind::isotropic;
  /// gcd(m_n, m_n'); the diagonal is left at 0.
  std::vector<std::vector<int>> gcd_matrix;
  /// Three modes, non-canonical only: "type1" / "type2" / "type3" by the number of pairs sharing a divisor.
  std::optional<std::string> subtype;
};

inline OscillatorClass classify(const FrequencySignature& sig) {
  const std::size_t n = sig.dim();
  OscillatorClass c;
  c.gcd_matrix.assign(n, std::vector<int>(n, 0));
  std::size_t shared = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const int g = std::gcd(sig.m(a), sig.m(b));
      c.gcd_matrix[a][b] = c.gcd_matrix[b][a] = g;
      if (g > 1) ++shared;
    }
  const bool all_one = std::all_of(sig.m().begin(), sig.m().end(), [](int v) { return v == 1; });
  if (all_one)
    c.kind = OscillatorKind::isotropic;
  else if (shared == 0)
    c.kind = OscillatorKind::canonical;
  else
    c.kind = OscillatorKind::non_canonical;
  if (n == 3 && c.kind == OscillatorKind::non_canonical) c.subtype = "type" + std::to_string(shared);
  return c;
}

// ---------------------------------------------------------------------------
// Periods

inline constexpr std::size_t kMaxCensusDim = 20;

struct PeriodEntry {
  std::vector<std::size_t> subset;  // zero-based mode indices
  std::uint64_t lcm = 1;
  double period = 0.0;  // 2 pi lcm / omega
};

struct PeriodCensus {
  std::vector<PeriodEntry> periods;  // ordered by subset bitmask
  std::uint64_t revolutions = 1;     // M = lcm(m)
  std::vector<std::uint64_t> winding;  // w_n = M / m_n

  std::size_t distinct_count() const {
    std::vector<std::uint64_t> v;
    for (const auto& p : periods) v.push_back(p.lcm);
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
  }
};

namespace detail {
inline std::uint64_t checked_lcm(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t g = std::gcd(a, b);
  const std::uint64_t q = a / g;
  if (b != 0 && q > std::numeric_limits<std::uint64_t>::max() / b) throw LimitExceeded("period lcm overflows 64 bits");
  return q * b;
}
}  // namespace detail

inline PeriodCensus period_census(const FrequencySignature& sig) {
  const std::size_t n = sig.dim();
  if (n > kMaxCensusDim) throw LimitExceeded("period_census supports at most " + std::to_string(kMaxCensusDim) + " modes");
  PeriodCensus c;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    PeriodEntry e;
    for (std::size_t k = 0; k < n; ++k)
      if (mask & (std::uint64_t{1} << k)) {
        e.subset.push_back(k);
        e.lcm = detail::checked_lcm(e.lcm, static_cast<std::uint64_t>(sig.m(k)));
      }
    e.period = kTwoPi * static_cast<double>(e.lcm) / sig.omega();
    c.periods.push_back(std::move(e));
  }
  c.revolutions = c.periods.back().lcm;
  for (std::size_t k = 0; k < n; ++k) c.winding.push_back(c.revolutions / static_cast<std::uint64_t>(sig.m(k)));
  return c;
}

// ---------------------------------------------------------------------------
// Subsystems

struct Subsystem {
  std::vector<std::size_t> subset;  // zero-based, ascending
  int divisor = 1;                  // k = gcd of m over the subset
  std::vector<int> m_prime;         // m_n / k

  /// beta'_n = (|alpha_n| / sqrt(m'_n)) (alpha_n / |alpha_n|)^{m'_n} for n in the subset.
  ReducedPoint reduce(const PhasePoint& x) const {
    ReducedPoint b{CVector(static_cast<Eigen::Index>(subset.size()))};
    for (std::size_t k = 0; k < subset.size(); ++k)
      b.beta(static_cast<Eigen::Index>(k)) = reduce_mode(x.alpha(static_cast<Eigen::Index>(subset[k])), m_prime[k]);
    return b;
  }

  /// J'_{ab} = conj(beta'_a) beta'_b as a phase-space function (a, b index into `subset`).
  PhaseFunction j_prime(std::size_t a, std::size_t b) const {
    using observables::idx;
    return observables::sesquilinear(m_prime, subset, observables::matrix_unit(subset.size(), a, b),
                                     "J'" + idx(subset[a]) + idx(subset[b]));
  }
};

inline Subsystem subsystem(const FrequencySignature& sig, std::vector<std::size_t> subset) {
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  if (subset.size() < 2) throw Error("subsystem needs at least two modes");
  for (std::size_t k : subset)
    if (k >= sig.dim()) throw IndexOutOfRange("subsystem: mode index out of range");
  Subsystem s;
  s.subset = std::move(subset);
  s.divisor = 0;
  for (std::size_t k : s.subset) s.divisor = std::gcd(s.divisor, sig.m(k));
  for (std::size_t k : s.subset) s.m_prime.push_back(sig.m(k) / s.divisor);
  return s;
}

// ---------------------------------------------------------------------------
// Non-closure of the combined algebra

inline constexpr double kDefaultNonclosureThreshold = 1e-3;

struct NonclosureOptions {
  std::size_t samples = kDefaultSamples;
  std::uint64_t seed = kDefaultSeed;
  double threshold = kDefaultNonclosureThreshold;
  unsigned jobs = 1;
};

struct NonclosureReport {
  Subsystem sub;
  std::size_t samples = 0;
  std::size_t basis_size = 0;
  double threshold = 0.0;
  /// Largest relative least-squares residual of a bracket {J', J} against span{J, J', 1}.
  double fit_residual = 0.0;
  std::string worst_bracket;
  /// max |{H, J'}| over the samples.
  double energy_residual = 0.0;
  bool nonclosure = false;
};

namespace detail {

/// Real and imaginary parts of an upper-triangular set of sesquilinear entries.
inline std::vector<PhaseFunction> real_components(const std::vector<std::vector<PhaseFunction>>& entries) {
  std::vector<PhaseFunction> out;
  const std::size_t n = entries.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      const PhaseFunction& f = entries[a][b];
      out.push_back(observables::real_of(f));
      if (a != b) {
        PhaseFunction im = f;
        im.label = "Im(" + f.label + ")";
        im.eval = [e = f.eval](const PhasePoint& x) { return Complex(e(x).imag(), 0.0); };
        im.gradient = [g = f.gradient](const PhasePoint& x) -> CVector { return g(x).imag().cast<Complex>(); };
        out.push_back(std::move(im));
      }
    }
  return out;
}

}  // namespace detail

inline NonclosureReport nonclosure_check(const FrequencySignature& sig, std::vector<std::size_t> subset,
                                         const NonclosureOptions& opt = {}) {
  NonclosureReport rep;
  rep.sub = subsystem(sig, std::move(subset));
  rep.samples = opt.samples;
  rep.threshold = opt.threshold;
  const std::size_t d = sig.dim();
  const std::size_t s = rep.sub.subset.size();

  std::vector<std::vector<PhaseFunction>> full(d, std::vector<PhaseFunction>(d));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) full[a][b] = observables::j_entry(sig, a, b);
  std::vector<std::vector<PhaseFunction>> primed(s, std::vector<PhaseFunction>(s));
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b) primed[a][b] = rep.sub.j_prime(a, b);

  const std::vector<PhaseFunction> jf = detail::real_components(full);
  const std::vector<PhaseFunction> jp = detail::real_components(primed);
  const PhaseFunction ham = observables::hamiltonian(sig);
  const std::size_t nb = jf.size() + jp.size() + 1;
  const std::size_t nt = jp.size() * jf.size();
  rep.basis_size = nb;
  if (opt.samples < nb) throw Error("nonclosure_check: need at least as many samples as basis functions");

  std::mt19937_64 rng(opt.seed);
  std::vector<PhasePoint> points;
  for (std::size_t k = 0; k < opt.samples; ++k) points.push_back(sample_point(rng, d));

  Eigen::MatrixXd basis(static_cast<Eigen::Index>(opt.samples), static_cast<Eigen::Index>(nb));
  Eigen::MatrixXd targets(static_cast<Eigen::Index>(opt.samples), static_cast<Eigen::Index>(nt));
  std::vector<double> energy(opt.samples, 0.0);
  parallel_for(points.size(), opt.jobs, [&](std::size_t r) {
    const PhasePoint& x = points[r];
    const auto row = static_cast<Eigen::Index>(r);
    std::vector<CVector> gf, gp;
    Eigen::Index col = 0;
    for (const auto& f : jf) {
      basis(row, col++) = f.eval(x).real();
      gf.push_back(f.gradient(x));
    }
    for (const auto& f : jp) {
      basis(row, col++) = f.eval(x).real();
      gp.push_back(f.gradient(x));
    }
    basis(row, col) = 1.0;
    const CVector gh = ham.gradient(x);
    Eigen::Index t = 0;
    for (std::size_t a = 0; a < gp.size(); ++a) {
      energy[r] = std::max(energy[r], std::abs(bracket_from_gradients(gh, gp[a])));
      for (std::size_t b = 0; b < gf.size(); ++b) targets(row, t++) = bracket_from_gradients(gp[a], gf[b]).real();
    }
  });

  for (double e : energy) rep.energy_residual = std::max(rep.energy_residual, e);
  if (!basis.allFinite() || !targets.allFinite()) throw StencilFailure(0, 0.0);

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::MatrixXd coeffs = svd.solve(targets);
  const Eigen::MatrixXd resid = targets - basis * coeffs;
  const double scale = std::max(1.0, targets.cwiseAbs().maxCoeff());
  for (Eigen::Index t = 0; t < targets.cols(); ++t) {
    const double tn = targets.col(t).norm();
    // identically vanishing brackets carry no information
    if (tn < 1e-12 * scale * std::sqrt(static_cast<double>(opt.samples))) continue;
    const double rel = resid.col(t).norm() / tn;
    if (rel > rep.fit_residual) {
      rep.fit_residual = rel;
      const std::size_t a = static_cast<std::size_t>(t) / jf.size(), b = static_cast<std::size_t>(t) % jf.size();
      rep.worst_bracket = "{" + jp[a].label + "," + jf[b].label + "}";
    }
  }
  rep.nonclosure = rep.fit_residual > opt.threshold;
  return rep;
}

}  // namespace oscillab
