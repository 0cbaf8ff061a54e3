#pragma once

// Phase space of a commensurate harmonic oscillator: frequency signature,
// coordinate views, the reduction map alpha -> beta and the discrete and
// continuous phase actions that act on it.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "oscillab/errors.hpp"

namespace oscillab {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2pi). Every mod-2pi reduction in the library goes through here.
inline double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Integer frequency divisors m and base frequency omega; mode n oscillates at omega / m_n.
/// The overall common divisor of m is removed on construction.
class FrequencySignature {
 public:
  const std::vector<int>& m() const noexcept { return m_; }
  int m(std::size_t n) const { return m_.at(n); }
  double omega() const noexcept { return omega_; }
  std::size_t dim() const noexcept { return m_.size(); }

  friend FrequencySignature make_signature(std::span<const int> m_raw, double omega);

  friend bool operator==(const FrequencySignature&, const FrequencySignature&) = default;

 private:
  FrequencySignature(std::vector<int> m, double omega) : m_(std::move(m)), omega_(omega) {}

  std::vector<int> m_;
  double omega_;
};

inline FrequencySignature make_signature(std::span<const int> m_raw, double omega) {
  if (m_raw.empty()) throw InvalidSignature("frequency signature must have at least one entry");
  for (int v : m_raw) {
    if (v < 1) throw InvalidSignature("frequency divisors must be positive integers, got " + std::to_string(v));
  }
  if (!std::isfinite(omega) || omega <= 0.0) throw InvalidSignature("omega must be positive and finite");
  int g = 0;
  for (int v : m_raw) g = std::gcd(g, v);
  std::vector<int> m(m_raw.begin(), m_raw.end());
  for (int& v : m) v /= g;
  return FrequencySignature(std::move(m), omega);
}

inline FrequencySignature make_signature(std::initializer_list<int> m_raw, double omega = 1.0) {
  return make_signature(std::span<const int>(m_raw.begin(), m_raw.size()), omega);
}

/// A point of the full phase space, alpha_n = (q_n + i p_n) / sqrt(2).
struct PhasePoint {
  CVector alpha;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(alpha.size()); }
  double action(std::size_t n) const { return std::norm(alpha(static_cast<Eigen::Index>(n))); }
};

/// A point of the reduced phase space.
struct ReducedPoint {
  CVector beta;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(beta.size()); }
};

/// Element R_1^{r_1} ... R_N^{r_N} of the ambiguity group; r_n is taken modulo m_n.
struct AmbiguityElement {
  std::vector<long> r;
};

struct CoordinateViews {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> action;
  /// Principal angle in [0, 2pi); empty where the action vanishes.
  std::vector<std::optional<double>> angle;
};

inline PhasePoint make_point(std::initializer_list<Complex> values) {
  PhasePoint x{CVector(static_cast<Eigen::Index>(values.size()))};
  Eigen::Index i = 0;
  for (const auto& v : values) x.alpha(i++) = v;
  return x;
}

inline ReducedPoint make_reduced(std::initializer_list<Complex> values) {
  ReducedPoint b{CVector(static_cast<Eigen::Index>(values.size()))};
  Eigen::Index i = 0;
  for (const auto& v : values) b.beta(i++) = v;
  return b;
}

inline CoordinateViews coordinate_views(const PhasePoint& x) {
  const std::size_t n = x.dim();
  CoordinateViews v;
  v.q.resize(n);
  v.p.resize(n);
  v.action.resize(n);
  v.angle.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex a = x.alpha(static_cast<Eigen::Index>(k));
    v.q[k] = std::numbers::sqrt2 * a.real();
    v.p[k] = std::numbers::sqrt2 * a.imag();
    v.action[k] = std::norm(a);
    if (v.action[k] > 0.0) v.angle[k] = wrap_angle(std::arg(a));
  }
  return v;
}

inline PhasePoint from_cartesian(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw DimensionMismatch("q and p must have equal length");
  PhasePoint x{CVector(static_cast<Eigen::Index>(q.size()))};
  for (std::size_t k = 0; k < q.size(); ++k) {
    x.alpha(static_cast<Eigen::Index>(k)) = Complex(q[k], p[k]) / std::numbers::sqrt2;
  }
  return x;
}

inline PhasePoint from_action_angle(std::span<const double> action, std::span<const double> angle) {
  if (action.size() != angle.size()) throw DimensionMismatch("actions and angles must have equal length");
  PhasePoint x{CVector(static_cast<Eigen::Index>(action.size()))};
  for (std::size_t k = 0; k < action.size(); ++k) {
    x.alpha(static_cast<Eigen::Index>(k)) = std::polar(std::sqrt(action[k]), angle[k]);
  }
  return x;
}

inline void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(got) + " does not match " +
                            std::to_string(want));
  }
}

/// Single-mode reduction beta = (|a| / sqrt(m)) (a / |a|)^m, with beta = 0 at a = 0.
inline Complex reduce_mode(Complex a, int m) {
  const double r = std::abs(a);
  if (r == 0.0) return Complex(0.0, 0.0);
  if (m == 1) return a;
  return std::polar(r / std::sqrt(static_cast<double>(m)), m * std::arg(a));
}

inline ReducedPoint reduce(const PhasePoint& x, const FrequencySignature& sig) {
  require_dim(x.dim(), sig.dim(), "reduce");
  ReducedPoint b{CVector(x.alpha.size())};
  for (Eigen::Index k = 0; k < x.alpha.size(); ++k) {
    b.beta(k) = reduce_mode(x.alpha(k), sig.m(static_cast<std::size_t>(k)));
  }
  return b;
}

inline PhasePoint ambiguity_apply(const PhasePoint& x, const FrequencySignature& sig, const AmbiguityElement& g) {
  require_dim(x.dim(), sig.dim(), "ambiguity_apply");
  require_dim(g.r.size(), sig.dim(), "ambiguity_apply");
  PhasePoint y = x;
  for (std::size_t k = 0; k < sig.dim(); ++k) {
    const long m = sig.m(k);
    const long r = ((g.r[k] % m) + m) % m;
    if (r == 0) continue;
    y.alpha(static_cast<Eigen::Index>(k)) *= std::polar(1.0, -kTwoPi * static_cast<double>(r) / static_cast<double>(m));
  }
  return y;
}

/// Order of the ambiguity group, prod m_n.
inline long ambiguity_order(const FrequencySignature& sig) {
  long order = 1;
  for (int v : sig.m()) order *= v;
  return order;
}

/// U(1) fiber action beta -> e^{i gamma} beta.
inline ReducedPoint fiber_rotate(const ReducedPoint& b, double gamma) {
  return ReducedPoint{b.beta * std::polar(1.0, gamma)};
}

}  // namespace oscillab
