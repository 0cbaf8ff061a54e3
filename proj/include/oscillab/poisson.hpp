#pragma once

// Numerical Poisson brackets with the convention {q_n, p_n'} = delta_nn'.
//
// Partials come from the exact gradient of a PhaseFunction when one is
// attached, otherwise from central differences with step h in each of the
// 2N Cartesian coordinates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "oscillab/observables.hpp"

namespace oscillab {

inline constexpr double kDefaultBracketStep = 1e-5;
inline constexpr double kDefaultBracketTol = 1e-5;
inline constexpr int kDefaultMaxBracketDepth = 6;
inline constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;
inline constexpr std::size_t kDefaultSamples = 100;
inline constexpr double kSampleActionMin = 0.1;
inline constexpr double kSampleActionMax = 2.0;

namespace detail {

/// x shifted by t * w, where w holds Cartesian components (q-part, p-part).
inline PhasePoint shift(const PhasePoint& x, const Eigen::VectorXd& w, double t) {
  const Eigen::Index n = x.alpha.size();
  PhasePoint y = x;
  for (Eigen::Index k = 0; k < n; ++k) y.alpha(k) += t * Complex(w(k), w(n + k)) / std::numbers::sqrt2;
  return y;
}

inline PhasePoint shift_coordinate(const PhasePoint& x, Eigen::Index c, double t) {
  const Eigen::Index n = x.alpha.size();
  PhasePoint y = x;
  if (c < n)
    y.alpha(c) += Complex(t / std::numbers::sqrt2, 0.0);
  else
    y.alpha(c - n) += Complex(0.0, t / std::numbers::sqrt2);
  return y;
}

inline Complex checked_eval(const PhaseFunction& f, const PhasePoint& y, std::size_t coordinate, double offset) {
  const Complex v = f.eval(y);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw StencilFailure(coordinate, offset);
  return v;
}

}  // namespace detail

/// Central-difference Cartesian gradient (d/dq_1..d/dq_N, d/dp_1..d/dp_N).
inline CVector fd_gradient(const PhaseFunction& f, const PhasePoint& x, double h) {
  const Eigen::Index n2 = 2 * x.alpha.size();
  CVector g(n2);
  for (Eigen::Index c = 0; c < n2; ++c) {
    const Complex fp = detail::checked_eval(f, detail::shift_coordinate(x, c, h), static_cast<std::size_t>(c), h);
    const Complex fm = detail::checked_eval(f, detail::shift_coordinate(x, c, -h), static_cast<std::size_t>(c), -h);
    g(c) = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Exact gradient when available (and `prefer_exact`), otherwise central differences.
inline CVector qp_gradient(const PhaseFunction& f, const PhasePoint& x, double h, bool prefer_exact = true) {
  if (prefer_exact && f.has_gradient()) return f.gradient(x);
  return fd_gradient(f, x, h);
}

/// sum_n (df/dq_n dg/dp_n - df/dp_n dg/dq_n) from two Cartesian gradients.
inline Complex bracket_from_gradients(const CVector& gf, const CVector& gg) {
  const Eigen::Index n = gf.size() / 2;
  Complex s(0.0, 0.0);
  for (Eigen::Index k = 0; k < n; ++k) s += gf(k) * gg(n + k) - gf(n + k) * gg(k);
  return s;
}

inline Complex bracket(const PhaseFunction& f, const PhaseFunction& g, const PhasePoint& x,
                       double h = kDefaultBracketStep, bool prefer_exact = true) {
  if (!(h > 0.0)) throw Error("bracket: step size must be positive");
  return bracket_from_gradients(qp_gradient(f, x, h, prefer_exact), qp_gradient(g, x, h, prefer_exact));
}

/// Hamiltonian vector field of g in Cartesian components: (dg/dp, -dg/dq).
inline CVector hamiltonian_field(const PhaseFunction& g, const PhasePoint& x, double h) {
  const CVector gg = qp_gradient(g, x, h);
  const Eigen::Index n = gg.size() / 2;
  CVector v(gg.size());
  v.head(n) = gg.tail(n);
  v.tail(n) = -gg.head(n);
  return v;
}

/// Step used by the outer levels of a depth-k nested difference; balances
/// truncation against the roundoff amplified once per level.
inline double nested_step(double h, int depth) {
  if (depth <= 1) return h;
  return std::max(h, std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (depth + 2)));
}

/// {f, g}_k at x: {f,g}_0 = f, {f,g}_{k+1} = {{f,g}_k, g}.
/// The innermost level is an ordinary bracket; each outer level is a central
/// directional difference of the inner level along the Hamiltonian field of g.
inline Complex iterated_bracket(const PhaseFunction& f, const PhaseFunction& g, int k, const PhasePoint& x,
                                double h = kDefaultBracketStep, int k_limit = kDefaultMaxBracketDepth) {
  if (k < 0) throw Error("iterated_bracket: depth must be non-negative");
  if (k > k_limit) throw LimitExceeded("iterated_bracket: depth " + std::to_string(k) + " exceeds limit " + std::to_string(k_limit));
  if (k == 0) return f.eval(x);
  const double hl = nested_step(h, k);
  const double h_inner = k == 1 ? h : hl;

  std::function<Complex(const PhasePoint&, int)> level = [&](const PhasePoint& y, int j) -> Complex {
    if (j == 1) return bracket(f, g, y, h_inner);
    const CVector field = hamiltonian_field(g, y, h);
    Complex out(0.0, 0.0);
    for (int part = 0; part < 2; ++part) {
      const Eigen::VectorXd w = part == 0 ? Eigen::VectorXd(field.real()) : Eigen::VectorXd(field.imag());
      const double norm = w.norm();
      if (norm == 0.0) continue;
      const double t = hl / norm;
      const Complex fp = level(detail::shift(y, w, t), j - 1);
      const Complex fm = level(detail::shift(y, w, -t), j - 1);
      if (!std::isfinite(std::abs(fp)) || !std::isfinite(std::abs(fm))) throw StencilFailure(0, t);
      const Complex d = (fp - fm) / (2.0 * t);
      out += part == 0 ? d : Complex(0.0, 1.0) * d;
    }
    return out;
  };
  return level(x, k);
}

/// Truncated Lie series sum_{k<=k_max} {f,g}_k tau^k / k!, i.e. f transported a parameter
/// distance tau along the flow of g. Intended for |tau| <= 0.1.
inline Complex exp_series_flow(const PhaseFunction& f, const PhaseFunction& g, double tau, const PhasePoint& x,
                               int k_max = kDefaultMaxBracketDepth, double h = kDefaultBracketStep) {
  Complex sum(0.0, 0.0);
  double coeff = 1.0;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) coeff *= tau / k;
    sum += coeff * iterated_bracket(f, g, k, x, h, std::max(k_max, kDefaultMaxBracketDepth));
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Algebra verification

enum class Relation { IK, su2, uN };

inline std::string to_string(Relation r) {
  switch (r) {
    case Relation::IK: return "IK";
    case Relation::su2: return "su2";
    case Relation::uN: return "uN";
  }
  return "?";
}

inline Relation parse_relation(const std::string& s) {
  if (s == "IK") return Relation::IK;
  if (s == "su2") return Relation::su2;
  if (s == "uN") return Relation::uN;
  throw Error("unknown relation '" + s + "' (expected IK, su2 or uN)");
}

struct VerifyOptions {
  std::size_t samples = kDefaultSamples;
  std::uint64_t seed = kDefaultSeed;
  double h = kDefaultBracketStep;
  double tol = kDefaultBracketTol;
  bool exact_gradients = false;
  unsigned jobs = 1;
};

struct AlgebraReport {
  std::string relation;
  std::size_t samples = 0;
  std::size_t failed_samples = 0;
  double h = 0.0;
  double tol = 0.0;
  bool exact_gradients = false;
  double max_residual = 0.0;
  std::string worst_check;
  PhasePoint worst_point;
  bool pass = false;
};

/// Random phase-space point with actions uniform in [i_min, i_max] and angles uniform in [0, 2pi).
template <class Rng>
PhasePoint sample_point(Rng& rng, std::size_t dim, double i_min = kSampleActionMin, double i_max = kSampleActionMax) {
  std::uniform_real_distribution<double> act(i_min, i_max);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  PhasePoint x{CVector(static_cast<Eigen::Index>(dim))};
  for (std::size_t k = 0; k < dim; ++k) {
    const double i = act(rng);
    x.alpha(static_cast<Eigen::Index>(k)) = std::polar(std::sqrt(i), ang(rng));
  }
  return x;
}

/// A set of observables and bracket identities {F_a, F_b} = expected(F values).
struct BracketIdentitySet {
  struct Check {
    std::string label;
    std::size_t a, b;
    std::function<Complex(const std::vector<Complex>&)> expected;
  };
  std::vector<PhaseFunction> funcs;
  std::vector<Check> checks;
};

inline BracketIdentitySet relation_identities(const FrequencySignature& sig, Relation rel) {
  using namespace observables;
  BracketIdentitySet set;
  const std::size_t d = sig.dim();
  const Complex i(0.0, 1.0);
  switch (rel) {
    case Relation::IK: {
      if (d < 2) throw DimensionMismatch("IK relations need at least two modes");
      for (std::size_t n = 0; n < d; ++n) set.funcs.push_back(action(n));
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a + 1; b < d; ++b) {
          // K = K_{ba} = alpha_b^{m_b} conj(alpha_a)^{m_a}
          const std::size_t kidx = set.funcs.size();
          set.funcs.push_back(k_invariant(sig, b, a));
          const double ma = sig.m(a), mb = sig.m(b);
          const std::string kl = "K" + idx(b) + idx(a);
          set.checks.push_back({"{I" + idx(a) + "," + kl + "}", a, kidx,
                                [=](const std::vector<Complex>& v) { return -i * ma * v[kidx]; }});
          set.checks.push_back({"{I" + idx(b) + "," + kl + "}", b, kidx,
                                [=](const std::vector<Complex>& v) { return i * mb * v[kidx]; }});
          set.checks.push_back({"{I" + idx(a) + ",I" + idx(b) + "}", a, b,
                                [](const std::vector<Complex>&) { return Complex(0.0, 0.0); }});
        }
      break;
    }
    case Relation::su2: {
      require_dim(d, 2, "su2 relations");
      for (int nu = 0; nu < 4; ++nu) set.funcs.push_back(j_component(sig, nu));
      const int cyc[3][3] = {{1, 2, 3}, {2, 3, 1}, {3, 1, 2}};
      for (const auto& c : cyc) {
        const int l = c[2];
        set.checks.push_back({"{J" + std::to_string(c[0]) + ",J" + std::to_string(c[1]) + "}",
                              static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]),
                              [l](const std::vector<Complex>& v) { return v[static_cast<std::size_t>(l)]; }});
      }
      for (std::size_t j = 1; j <= 3; ++j)
        set.checks.push_back({"{J0,J" + std::to_string(j) + "}", 0, j,
                              [](const std::vector<Complex>&) { return Complex(0.0, 0.0); }});
      break;
    }
    case Relation::uN: {
      for (std::size_t n = 0; n < d; ++n)
        for (std::size_t np = 0; np < d; ++np) set.funcs.push_back(j_entry(sig, n, np));
      auto at = [d](std::size_t r, std::size_t c) { return r * d + c; };
      for (std::size_t n = 0; n < d; ++n)
        for (std::size_t np = 0; np < d; ++np)
          for (std::size_t k = 0; k < d; ++k)
            for (std::size_t kp = 0; kp < d; ++kp) {
              set.checks.push_back(
                  {"{J" + idx(n) + idx(np) + ",J" + idx(k) + idx(kp) + "}", at(n, np), at(k, kp),
                   [=](const std::vector<Complex>& v) {
                     Complex r(0.0, 0.0);
                     if (n == kp) r += v[at(k, np)];
                     if (np == k) r -= v[at(n, kp)];
                     return i * r;
                   }});
            }
      break;
    }
  }
  return set;
}

struct SampleResidual {
  bool ok = false;
  double residual = 0.0;
  std::size_t worst_check = 0;
};

/// Maximum identity residual at one point.
inline SampleResidual identity_residual(const BracketIdentitySet& set, const PhasePoint& x, double h, bool exact) {
  std::vector<CVector> grads;
  std::vector<Complex> values;
  grads.reserve(set.funcs.size());
  values.reserve(set.funcs.size());
  for (const auto& f : set.funcs) {
    values.push_back(f.eval(x));
    grads.push_back(qp_gradient(f, x, h, exact));
  }
  SampleResidual r{true, 0.0, 0};
  for (std::size_t c = 0; c < set.checks.size(); ++c) {
    const auto& chk = set.checks[c];
    const double res = std::abs(bracket_from_gradients(grads[chk.a], grads[chk.b]) - chk.expected(values));
    if (!std::isfinite(res)) throw StencilFailure(c, h);
    if (res > r.residual) {
      r.residual = res;
      r.worst_check = c;
    }
  }
  return r;
}

/// Runs `work(i)` for i in [0, count) on up to `jobs` threads. Results must be written to
/// per-index slots so that the outcome is independent of scheduling.
template <class Work>
void parallel_for(std::size_t count, unsigned jobs, Work&& work) {
  if (jobs <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  const unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nthreads);
  for (unsigned t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += nthreads) work(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline AlgebraReport verify_algebra(const FrequencySignature& sig, Relation rel, const VerifyOptions& opt = {}) {
  const BracketIdentitySet set = relation_identities(sig, rel);
  std::mt19937_64 rng(opt.seed);
  std::vector<PhasePoint> points;
  points.reserve(opt.samples);
  for (std::size_t s = 0; s < opt.samples; ++s) points.push_back(sample_point(rng, sig.dim()));

  std::vector<SampleResidual> results(points.size());
  parallel_for(points.size(), opt.jobs, [&](std::size_t s) {
    try {
      results[s] = identity_residual(set, points[s], opt.h, opt.exact_gradients);
    } catch (const Error&) {
      results[s] = SampleResidual{};
    }
  });

  AlgebraReport rep;
  rep.relation = to_string(rel);
  rep.samples = opt.samples;
  rep.h = opt.h;
  rep.tol = opt.tol;
  rep.exact_gradients = opt.exact_gradients;
  bool any = false;
  for (std::size_t s = 0; s < results.size(); ++s) {
    if (!results[s].ok) {
      ++rep.failed_samples;
      continue;
    }
    if (!any || results[s].residual > rep.max_residual) {
      rep.max_residual = results[s].residual;
      rep.worst_point = points[s];
      rep.worst_check = set.checks[results[s].worst_check].label;
      any = true;
    }
  }
  if (!any && opt.samples > 0) throw Error("verify_algebra: every sample failed (" + rep.relation + ")");
  rep.pass = any && rep.max_residual < opt.tol;
  return rep;
}

}  // namespace oscillab
