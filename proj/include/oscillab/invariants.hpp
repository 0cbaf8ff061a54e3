#pragma once

// Constants of motion: energy, the monomial invariants K, relative angles,
// and the sesquilinear invariant matrix J_{nn'} = conj(beta_n) beta_n'.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "oscillab/core_space.hpp"

namespace oscillab {

inline double hamiltonian(const PhasePoint& x, const FrequencySignature& sig) {
  require_dim(x.dim(), sig.dim(), "hamiltonian");
  double e = 0.0;
  for (std::size_t n = 0; n < sig.dim(); ++n) e += x.action(n) / sig.m(n);
  return sig.omega() * e;
}

inline Complex int_pow(Complex z, int k) {
  Complex r(1.0, 0.0);
  while (k > 0) {
    if (k & 1) r *= z;
    z *= z;
    k >>= 1;
  }
  return r;
}

/// K_{nn'} = alpha_n^{m_n} conj(alpha_n')^{m_n'} (zero-based indices). The two-mode
/// invariant alpha_2^{m_2} conj(alpha_1)^{m_1} is k_invariant(x, sig, 1, 0).
inline Complex k_invariant(const PhasePoint& x, const FrequencySignature& sig, std::size_t n, std::size_t nprime) {
  require_dim(x.dim(), sig.dim(), "k_invariant");
  if (n >= sig.dim() || nprime >= sig.dim()) throw IndexOutOfRange("k_invariant: mode index out of range");
  if (n == nprime) throw IndexOutOfRange("k_invariant: indices must differ");
  const auto i = static_cast<Eigen::Index>(n);
  const auto j = static_cast<Eigen::Index>(nprime);
  return int_pow(x.alpha(i), sig.m(n)) * int_pow(std::conj(x.alpha(j)), sig.m(nprime));
}

/// Relative angles chi_{nn'} = (m_n phi_n - m_n' phi_n') mod 2pi for n < n'.
class RelAngleSet {
 public:
  explicit RelAngleSet(std::size_t dim) : dim_(dim), chi_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

  std::size_t dim() const noexcept { return dim_; }

  /// chi_{nn'}; for n > n' returns (2pi - chi_{n'n}) mod 2pi, and 0 on the diagonal.
  double at(std::size_t n, std::size_t nprime) const {
    if (n >= dim_ || nprime >= dim_) throw IndexOutOfRange("RelAngleSet: index out of range");
    if (n == nprime) return 0.0;
    if (n < nprime) return chi_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nprime));
    return wrap_angle(kTwoPi - chi_(static_cast<Eigen::Index>(nprime), static_cast<Eigen::Index>(n)));
  }

  void set(std::size_t n, std::size_t nprime, double value) {
    chi_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nprime)) = value;
  }

  /// Largest distance from 0 (on the circle) of chi_{ab} + chi_{bc} + chi_{ca} over all distinct triples.
  double cocycle_residual() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < dim_; ++a)
      for (std::size_t b = 0; b < dim_; ++b)
        for (std::size_t c = 0; c < dim_; ++c) {
          if (a == b || b == c || a == c) continue;
          const double s = wrap_angle(at(a, b) + at(b, c) + at(c, a));
          worst = std::max(worst, std::min(s, kTwoPi - s));
        }
    return worst;
  }

 private:
  std::size_t dim_;
  Eigen::MatrixXd chi_;
};

inline RelAngleSet rel_angles(const PhasePoint& x, const FrequencySignature& sig) {
  require_dim(x.dim(), sig.dim(), "rel_angles");
  const std::size_t n = sig.dim();
  std::vector<double> phase(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (x.action(k) == 0.0) throw ZeroActionError(k);
    phase[k] = sig.m(k) * wrap_angle(std::arg(x.alpha(static_cast<Eigen::Index>(k))));
  }
  RelAngleSet chi(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) chi.set(a, b, wrap_angle(phase[a] - phase[b]));
  return chi;
}

/// The invariants J on the reduced space: j0 = beta^+ beta / 2, jmat_{nn'} = conj(beta_n) beta_n',
/// and for two modes the real vector J_k = beta^+ sigma_k beta / 2.
struct InvariantSet {
  double j0 = 0.0;
  CMatrix jmat;
  std::optional<std::array<double, 3>> jvec;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(jmat.rows()); }

  /// Builds the set from a hermitean matrix (j0 = trace / 2; jvec filled for 2x2 input).
  static InvariantSet from_matrix(const CMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("invariant matrix must be square");
    InvariantSet s;
    s.jmat = m;
    s.j0 = 0.5 * m.trace().real();
    if (m.rows() == 2) {
      const Complex j12 = m(0, 1);
      s.jvec = std::array<double, 3>{j12.real(), j12.imag(), 0.5 * (m(0, 0).real() - m(1, 1).real())};
    }
    return s;
  }

  /// Two-mode set from the four-vector (J0, J1, J2, J3).
  static InvariantSet from_four_vector(double j0, const std::array<double, 3>& j) {
    InvariantSet s;
    s.j0 = j0;
    s.jvec = j;
    s.jmat.resize(2, 2);
    s.jmat(0, 0) = j0 + j[2];
    s.jmat(1, 1) = j0 - j[2];
    s.jmat(0, 1) = Complex(j[0], j[1]);
    s.jmat(1, 0) = Complex(j[0], -j[1]);
    return s;
  }

  /// Hermiticity defect max |J_{nn'} - conj(J_{n'n})|.
  double hermitean_residual() const { return (jmat - jmat.adjoint()).cwiseAbs().maxCoeff(); }
};

inline InvariantSet invariant_set(const ReducedPoint& b) {
  const CVector& beta = b.beta;
  // J_{nn'} = conj(beta_n) beta_n'
  CMatrix jm = beta.conjugate() * beta.transpose();
  return InvariantSet::from_matrix(jm);
}

/// J = (J0, J1, J2, J3) for a two-mode set.
inline std::array<double, 4> four_vector(const InvariantSet& s) {
  if (!s.jvec) throw DimensionMismatch("four_vector requires a two-mode invariant set");
  return {s.j0, (*s.jvec)[0], (*s.jvec)[1], (*s.jvec)[2]};
}

/// Two-mode four-vector written with actions and the relative angle chi = m2 phi2 - m1 phi1.
inline std::array<double, 4> four_vector_action_angle(const PhasePoint& x, const FrequencySignature& sig) {
  require_dim(x.dim(), 2, "four_vector_action_angle");
  require_dim(sig.dim(), 2, "four_vector_action_angle");
  const double i1 = x.action(0), i2 = x.action(1);
  const double m1 = sig.m(0), m2 = sig.m(1);
  const double chi = rel_angles(x, sig).at(1, 0);
  const double r = std::sqrt(i1 * i2 / (m1 * m2));
  return {i1 / (2 * m1) + i2 / (2 * m2), r * std::cos(chi), r * std::sin(chi), i1 / (2 * m1) - i2 / (2 * m2)};
}

/// Distance from the physical (rank-one) set. Two modes: |J0^2 - |J|^2|.
/// Otherwise: the second-largest eigenvalue magnitude of jmat.
inline double cone_residual(const InvariantSet& s) {
  if (s.jvec) {
    const auto& j = *s.jvec;
    return std::abs(s.j0 * s.j0 - (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]));
  }
  if (s.dim() < 2) return 0.0;
  const CMatrix herm = 0.5 * (s.jmat + s.jmat.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
  Eigen::VectorXd mags = es.eigenvalues().cwiseAbs();
  std::sort(mags.data(), mags.data() + mags.size(), std::greater<>());
  return mags(1);
}

/// Largest change of any constant of motion between two phase-space points: H, every K_{nn'},
/// every J_{nn'} and, when all actions are nonzero, every relative angle (distance on the circle).
inline double invariant_distance(const PhasePoint& x, const PhasePoint& y, const FrequencySignature& sig) {
  const std::size_t d = sig.dim();
  double worst = std::abs(hamiltonian(x, sig) - hamiltonian(y, sig));
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b)
      if (a != b) worst = std::max(worst, std::abs(k_invariant(x, sig, a, b) - k_invariant(y, sig, a, b)));
  const CMatrix dj = invariant_set(reduce(x, sig)).jmat - invariant_set(reduce(y, sig)).jmat;
  worst = std::max(worst, dj.cwiseAbs().maxCoeff());
  bool regular = true;
  for (std::size_t n = 0; n < d; ++n) regular = regular && x.action(n) > 0.0 && y.action(n) > 0.0;
  if (regular && d > 1) {
    const RelAngleSet cx = rel_angles(x, sig), cy = rel_angles(y, sig);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a + 1; b < d; ++b) {
        const double diff = wrap_angle(cx.at(a, b) - cy.at(a, b));
        worst = std::max(worst, std::min(diff, kTwoPi - diff));
      }
  }
  return worst;
}

/// Tolerance used when asking whether a matrix is rank one.
inline double rank_one_tolerance(const InvariantSet& s) { return 1e-10 * (1.0 + s.j0); }

}  // namespace oscillab
