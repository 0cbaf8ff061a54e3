#pragma once

// Phase-space functions with exact gradients.
//
// Gradients are carried in Wirtinger form (d/d alpha_n, d/d conj(alpha_n)) and
// converted to Cartesian partials on request:
//   d/dq = (d/da + d/dab) / sqrt(2),   d/dp = i (d/da - d/dab) / sqrt(2).

#include <functional>
#include <string>
#include <utility>

#include "oscillab/core_space.hpp"
#include "oscillab/invariants.hpp"

namespace oscillab {

/// A complex function value together with its Wirtinger derivatives.
struct Wirtinger {
  Complex value;
  CVector da;
  CVector dab;

  static Wirtinger constant(Complex v, Eigen::Index n) { return {v, CVector::Zero(n), CVector::Zero(n)}; }

  Wirtinger conj() const { return {std::conj(value), dab.conjugate(), da.conjugate()}; }

  friend Wirtinger operator+(const Wirtinger& a, const Wirtinger& b) {
    return {a.value + b.value, a.da + b.da, a.dab + b.dab};
  }
  friend Wirtinger operator-(const Wirtinger& a, const Wirtinger& b) {
    return {a.value - b.value, a.da - b.da, a.dab - b.dab};
  }
  friend Wirtinger operator*(const Wirtinger& a, const Wirtinger& b) {
    return {a.value * b.value, a.da * b.value + b.da * a.value, a.dab * b.value + b.dab * a.value};
  }
  friend Wirtinger operator*(Complex s, const Wirtinger& a) { return {s * a.value, s * a.da, s * a.dab}; }

  /// Cartesian gradient ordered (d/dq_1 .. d/dq_N, d/dp_1 .. d/dp_N).
  CVector qp_gradient() const {
    const Eigen::Index n = da.size();
    CVector g(2 * n);
    const Complex i(0.0, 1.0);
    g.head(n) = (da + dab) / std::numbers::sqrt2;
    g.tail(n) = i * (da - dab) / std::numbers::sqrt2;
    return g;
  }
};

inline Wirtinger real_part(const Wirtinger& w) { return Complex(0.5, 0.0) * (w + w.conj()); }
inline Wirtinger imag_part(const Wirtinger& w) { return Complex(0.0, -0.5) * (w - w.conj()); }

namespace wirtinger {

inline Wirtinger alpha(const PhasePoint& x, std::size_t n) {
  const Eigen::Index d = x.alpha.size();
  Wirtinger w = Wirtinger::constant(x.alpha(static_cast<Eigen::Index>(n)), d);
  w.da(static_cast<Eigen::Index>(n)) = 1.0;
  return w;
}

inline Wirtinger action(const PhasePoint& x, std::size_t n) { return alpha(x, n).conj() * alpha(x, n); }

/// phi_n = (log alpha - log conj(alpha)) / 2i; real-valued, smooth away from alpha_n = 0.
inline Wirtinger angle(const PhasePoint& x, std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  const Complex a = x.alpha(k);
  if (a == Complex(0.0, 0.0)) throw ZeroActionError(n);
  Wirtinger w = Wirtinger::constant(wrap_angle(std::arg(a)), x.alpha.size());
  const Complex i(0.0, 1.0);
  w.da(k) = 1.0 / (2.0 * i * a);
  w.dab(k) = -1.0 / (2.0 * i * std::conj(a));
  return w;
}

/// beta = m^{-1/2} alpha^{(m+1)/2} conj(alpha)^{(1-m)/2}.
inline Wirtinger reduced_mode(const PhasePoint& x, int m, std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  const Complex a = x.alpha(k);
  if (m == 1) return alpha(x, n);
  if (a == Complex(0.0, 0.0)) throw ZeroActionError(n);
  const Complex b = reduce_mode(a, m);
  Wirtinger w = Wirtinger::constant(b, x.alpha.size());
  w.da(k) = 0.5 * (m + 1) * b / a;
  w.dab(k) = 0.5 * (1 - m) * b / std::conj(a);
  return w;
}

inline std::vector<Wirtinger> reduced(const PhasePoint& x, std::span<const int> m) {
  std::vector<Wirtinger> out;
  out.reserve(m.size());
  for (std::size_t n = 0; n < m.size(); ++n) out.push_back(reduced_mode(x, m[n], n));
  return out;
}

inline Wirtinger hamiltonian(const PhasePoint& x, const FrequencySignature& sig) {
  Wirtinger h = Wirtinger::constant(0.0, x.alpha.size());
  for (std::size_t n = 0; n < sig.dim(); ++n) h = h + Complex(sig.omega() / sig.m(n), 0.0) * action(x, n);
  return h;
}

inline Wirtinger k_invariant(const PhasePoint& x, const FrequencySignature& sig, std::size_t n, std::size_t np) {
  const Complex an = x.alpha(static_cast<Eigen::Index>(n));
  const Complex ap = std::conj(x.alpha(static_cast<Eigen::Index>(np)));
  const int mn = sig.m(n), mp = sig.m(np);
  Wirtinger w = Wirtinger::constant(int_pow(an, mn) * int_pow(ap, mp), x.alpha.size());
  w.da(static_cast<Eigen::Index>(n)) = static_cast<double>(mn) * int_pow(an, mn - 1) * int_pow(ap, mp);
  w.dab(static_cast<Eigen::Index>(np)) = static_cast<double>(mp) * int_pow(an, mn) * int_pow(ap, mp - 1);
  return w;
}

/// Sesquilinear form conj(beta) . A . beta over the given modes.
inline Wirtinger sesquilinear(const std::vector<Wirtinger>& beta, const CMatrix& a) {
  const Eigen::Index d = beta.empty() ? 0 : beta.front().da.size();
  Wirtinger acc = Wirtinger::constant(0.0, d);
  for (std::size_t r = 0; r < beta.size(); ++r)
    for (std::size_t c = 0; c < beta.size(); ++c) {
      const Complex coeff = a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (coeff == Complex(0.0, 0.0)) continue;
      acc = acc + coeff * (beta[r].conj() * beta[c]);
    }
  return acc;
}

}  // namespace wirtinger

/// A complex-valued observable on phase space with an optional exact Cartesian gradient.
struct PhaseFunction {
  std::string label;
  std::function<Complex(const PhasePoint&)> eval;
  std::function<CVector(const PhasePoint&)> gradient;

  Complex operator()(const PhasePoint& x) const { return eval(x); }
  bool has_gradient() const noexcept { return static_cast<bool>(gradient); }
};

inline PhaseFunction from_wirtinger(std::string label, std::function<Wirtinger(const PhasePoint&)> w) {
  PhaseFunction f;
  f.label = std::move(label);
  f.eval = [w](const PhasePoint& x) { return w(x).value; };
  f.gradient = [w](const PhasePoint& x) { return w(x).qp_gradient(); };
  return f;
}

inline PhaseFunction without_gradient(PhaseFunction f) {
  f.gradient = nullptr;
  return f;
}

namespace observables {

inline std::string idx(std::size_t n) { return std::to_string(n + 1); }

inline PhaseFunction q(std::size_t n) {
  return from_wirtinger("q" + idx(n), [n](const PhasePoint& x) {
    return Complex(std::numbers::sqrt2, 0.0) * real_part(wirtinger::alpha(x, n));
  });
}

inline PhaseFunction p(std::size_t n) {
  return from_wirtinger("p" + idx(n), [n](const PhasePoint& x) {
    return Complex(std::numbers::sqrt2, 0.0) * imag_part(wirtinger::alpha(x, n));
  });
}

inline PhaseFunction alpha(std::size_t n) {
  return from_wirtinger("alpha" + idx(n), [n](const PhasePoint& x) { return wirtinger::alpha(x, n); });
}

inline PhaseFunction alpha_bar(std::size_t n) {
  return from_wirtinger("conj(alpha" + idx(n) + ")",
                        [n](const PhasePoint& x) { return wirtinger::alpha(x, n).conj(); });
}

inline PhaseFunction action(std::size_t n) {
  return from_wirtinger("I" + idx(n), [n](const PhasePoint& x) { return wirtinger::action(x, n); });
}

inline PhaseFunction angle(std::size_t n) {
  return from_wirtinger("phi" + idx(n), [n](const PhasePoint& x) { return wirtinger::angle(x, n); });
}

inline PhaseFunction hamiltonian(const FrequencySignature& sig) {
  return from_wirtinger("H", [sig](const PhasePoint& x) { return wirtinger::hamiltonian(x, sig); });
}

inline PhaseFunction k_invariant(const FrequencySignature& sig, std::size_t n, std::size_t np) {
  return from_wirtinger("K" + idx(n) + idx(np),
                        [sig, n, np](const PhasePoint& x) { return wirtinger::k_invariant(x, sig, n, np); });
}

/// beta_n for an arbitrary divisor vector (used for primed subsystem variables as well).
inline PhaseFunction beta(std::vector<int> m, std::size_t n, std::string label = {}) {
  if (label.empty()) label = "beta" + idx(n);
  return from_wirtinger(std::move(label),
                        [m = std::move(m), n](const PhasePoint& x) { return wirtinger::reduced_mode(x, m[n], n); });
}

inline PhaseFunction beta_bar(std::vector<int> m, std::size_t n) {
  return from_wirtinger("conj(beta" + idx(n) + ")", [m = std::move(m), n](const PhasePoint& x) {
    return wirtinger::reduced_mode(x, m[n], n).conj();
  });
}

inline PhaseFunction real_of(PhaseFunction f) {
  PhaseFunction g;
  g.label = "Re(" + f.label + ")";
  g.eval = [e = f.eval](const PhasePoint& x) { return Complex(e(x).real(), 0.0); };
  if (f.gradient) {
    // the gradient of Re f is Re of the gradient, componentwise
    g.gradient = [gr = f.gradient](const PhasePoint& x) -> CVector { return gr(x).real().cast<Complex>(); };
  }
  return g;
}

/// conj(beta) . A . beta, where beta is built from the divisors m restricted to `modes`.
/// `modes` lists the phase-space indices the rows/columns of A refer to.
inline PhaseFunction sesquilinear(std::vector<int> m, std::vector<std::size_t> modes, CMatrix a, std::string label) {
  return from_wirtinger(std::move(label), [m = std::move(m), modes = std::move(modes), a = std::move(a)](const PhasePoint& x) {
    std::vector<Wirtinger> beta;
    beta.reserve(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) beta.push_back(wirtinger::reduced_mode(x, m[k], modes[k]));
    return wirtinger::sesquilinear(beta, a);
  });
}

/// Matrix unit E_{nn'} of size d.
inline CMatrix matrix_unit(std::size_t d, std::size_t n, std::size_t np) {
  CMatrix e = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  e(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(np)) = 1.0;
  return e;
}

inline std::vector<std::size_t> all_modes(std::size_t d) {
  std::vector<std::size_t> v(d);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

/// J_{nn'} = conj(beta_n) beta_n'.
inline PhaseFunction j_entry(const FrequencySignature& sig, std::size_t n, std::size_t np) {
  return sesquilinear(sig.m(), all_modes(sig.dim()), matrix_unit(sig.dim(), n, np), "J" + idx(n) + idx(np));
}

/// Pauli matrices sigma_0 .. sigma_3.
inline CMatrix pauli(int k) {
  CMatrix s(2, 2);
  const Complex i(0.0, 1.0);
  switch (k) {
    case 0: s << 1.0, 0.0, 0.0, 1.0; break;
    case 1: s << 0.0, 1.0, 1.0, 0.0; break;
    case 2: s << 0.0, -i, i, 0.0; break;
    case 3: s << 1.0, 0.0, 0.0, -1.0; break;
    default: throw IndexOutOfRange("pauli index must be 0..3");
  }
  return s;
}

/// J_nu = conj(beta) sigma_nu beta / 2 for a two-mode signature.
inline PhaseFunction j_component(const FrequencySignature& sig, int nu) {
  require_dim(sig.dim(), 2, "j_component");
  return sesquilinear(sig.m(), {0, 1}, 0.5 * pauli(nu), "J" + std::to_string(nu));
}

}  // namespace observables
}  // namespace oscillab
